#include "estlab/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "estlab/rng.hpp"

namespace estlab {

double best_subset_sum(const std::vector<double>& a, int k) {
    const int n = static_cast<int>(a.size());
    if (k < 0 || k > n) throw std::invalid_argument("k out of range");
    if (k == 0) return 0.0;
    if (n <= 20) {
        double best = -std::numeric_limits<double>::infinity();
        std::vector<int> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            double s = 0.0;
            for (const int i : idx) s += a[i];
            best = std::max(best, s);
            int i = k - 1;
            while (i >= 0 && idx[i] == n - k + i) --i;
            if (i < 0) break;
            ++idx[i];
            for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
        return best;
    }
    std::vector<double> sorted = a;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    return std::accumulate(sorted.begin(), sorted.begin() + k, 0.0);
}

SelectorCertificate selector_certificate(const std::vector<double>& a, int k) {
    const int n = static_cast<int>(a.size());
    if (k < 1 || k > n) throw std::invalid_argument("k out of range");
    SelectorCertificate cert;
    cert.k = k;
    cert.sorted_order.resize(n);
    std::iota(cert.sorted_order.begin(), cert.sorted_order.end(), 0);
    std::sort(cert.sorted_order.begin(), cert.sorted_order.end(),
              [&](int i, int j) { return a[i] > a[j]; });
    cert.a_sorted.resize(n);
    for (int i = 0; i < n; ++i) cert.a_sorted[i] = a[cert.sorted_order[i]];
    cert.bound = std::accumulate(cert.a_sorted.begin(), cert.a_sorted.begin() + k, 0.0);
    cert.pivot = cert.a_sorted[k - 1];
    for (int i = 0; i < k; ++i) {
        cert.terms.push_back({0, cert.sorted_order[i], cert.a_sorted[i] - cert.pivot});
    }
    for (int i = k; i < n; ++i) {
        cert.terms.push_back({1, cert.sorted_order[i], cert.pivot - cert.a_sorted[i]});
    }
    cert.terms.push_back({2, -1, cert.pivot});
    return cert;
}

double verify_selector(const SelectorCertificate& cert, int n, int samples, std::uint64_t seed) {
    Rng rng(seed, "verify_selector");
    std::vector<double> a(n, 0.0);
    for (int i = 0; i < n; ++i) a[cert.sorted_order[i]] = cert.a_sorted[i];
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        // random feasible z: Dirichlet-style mass k spread over [0,1] box
        std::vector<double> z(n);
        double total = 0.0;
        for (double& v : z) {
            v = rng.next_double();
            total += v;
        }
        const double scale = cert.k / total;
        bool ok = true;
        for (double& v : z) {
            v *= scale;
            if (v > 1.0) ok = false;
        }
        if (!ok) {
            // clamp and redistribute the excess once; remains feasible
            double excess = 0.0;
            int room = 0;
            for (double& v : z) {
                if (v > 1.0) {
                    excess += v - 1.0;
                    v = 1.0;
                } else {
                    ++room;
                }
            }
            for (double& v : z) {
                if (v < 1.0) v = std::min(1.0, v + excess / room);
            }
        }

        double lhs = cert.bound;
        for (int i = 0; i < n; ++i) lhs -= z[i] * a[i];
        double rhs = 0.0;
        double zsum = 0.0;
        for (int i = 0; i < n; ++i) zsum += z[i];
        for (const auto& t : cert.terms) {
            if (t.kind == 0) rhs += t.coeff * (1.0 - z[t.index]);
            else if (t.kind == 1) rhs += t.coeff * z[t.index];
            else rhs += t.coeff * (cert.k - zsum);
        }
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace estlab
