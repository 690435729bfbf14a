#include "estlab/io.hpp"

#include <fstream>
#include <sstream>

namespace estlab {

namespace {

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::vector<std::vector<double>> parse_csv_rows(const std::string& text, int* columns) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
    int cols = 1;
    for (const char c : line) cols += c == ',' ? 1 : 0;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string field;
        while (std::getline(ls, field, ',')) row.push_back(std::stod(field));
        if (static_cast<int>(row.size()) != cols) {
            throw std::invalid_argument("ragged CSV row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("CSV has no data rows");
    *columns = cols;
    return rows;
}

}  // namespace

std::string dataset_to_csv(const LabeledDataset& data) {
    std::ostringstream out;
    for (int a = 0; a < data.d(); ++a) out << "x" << a << ",";
    out << "y\n";
    for (int i = 0; i < data.n(); ++i) {
        for (int a = 0; a < data.d(); ++a) out << format_double(data.x(i, a)) << ",";
        out << format_double(data.y(i)) << "\n";
    }
    return out.str();
}

std::string dataset_to_csv(const PointDataset& data) {
    std::ostringstream out;
    for (int a = 0; a < data.d(); ++a) out << "x" << a << (a + 1 < data.d() ? "," : "");
    out << "\n";
    for (int i = 0; i < data.n(); ++i) {
        for (int a = 0; a < data.d(); ++a) {
            out << format_double(data.x(i, a)) << (a + 1 < data.d() ? "," : "");
        }
        out << "\n";
    }
    return out.str();
}

LabeledDataset labeled_from_csv(const std::string& text) {
    int cols = 0;
    const auto rows = parse_csv_rows(text, &cols);
    if (cols < 2) throw std::invalid_argument("labeled CSV needs at least x0 and y");
    LabeledDataset data;
    data.x.resize(rows.size(), cols - 1);
    data.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int a = 0; a < cols - 1; ++a) data.x(i, a) = rows[i][a];
        data.y(i) = rows[i][cols - 1];
    }
    return data;
}

PointDataset points_from_csv(const std::string& text) {
    int cols = 0;
    const auto rows = parse_csv_rows(text, &cols);
    PointDataset data;
    data.x.resize(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int a = 0; a < cols; ++a) data.x(i, a) = rows[i][a];
    }
    return data;
}

namespace {

Json mask_json(const std::optional<CorruptionMask>& mask) {
    if (!mask) return nullptr;
    Json arr = Json::array();
    for (const bool k : mask->kept) arr.push_back(k);
    return arr;
}

}  // namespace

Json dataset_envelope(const LabeledDataset& data, const Json& instance_meta,
                      const std::optional<CorruptionMask>& mask) {
    Json j;
    j["kind"] = "labeled";
    j["n"] = data.n();
    j["d"] = data.d();
    j["csv"] = dataset_to_csv(data);
    j["instance"] = instance_meta;
    j["mask"] = mask_json(mask);
    return j;
}

Json dataset_envelope(const PointDataset& data, const Json& instance_meta,
                      const std::optional<CorruptionMask>& mask) {
    Json j;
    j["kind"] = "points";
    j["n"] = data.n();
    j["d"] = data.d();
    j["csv"] = dataset_to_csv(data);
    j["instance"] = instance_meta;
    j["mask"] = mask_json(mask);
    return j;
}

Json to_json(const EstimateReport& report) {
    Json j;
    if (report.estimate_vector.size() > 0) {
        j["estimate"] = std::vector<double>(report.estimate_vector.data(),
                                            report.estimate_vector.data() + report.estimate_vector.size());
    }
    if (report.estimate_matrix.size() > 0) {
        Json m = Json::array();
        for (int a = 0; a < report.estimate_matrix.rows(); ++a) {
            Json row = Json::array();
            for (int b = 0; b < report.estimate_matrix.cols(); ++b) {
                row.push_back(report.estimate_matrix(a, b));
            }
            m.push_back(row);
        }
        j["estimate_matrix"] = m;
    }
    if (report.mahalanobis_error >= 0) j["mahalanobis_error"] = report.mahalanobis_error;
    if (report.spectral_error >= 0) j["spectral_error"] = report.spectral_error;
    if (report.frobenius_error >= 0) j["frobenius_error"] = report.frobenius_error;
    j["method"] = report.method;
    j["converged"] = report.converged;
    if (!report.solver.status.empty()) {
        j["solver"] = {{"status", report.solver.status},
                       {"iterations", report.solver.iterations},
                       {"detail", report.solver.detail}};
    }
    return j;
}

Json to_json(const GoodnessReport& report) {
    Json j;
    j["passed"] = report.passed;
    j["margin"] = report.margin;
    j["mode"] = report.mode;
    j["worst_clause"] = report.worst_clause;
    j["worst_subset_size"] = report.worst_subset_size;
    if (report.worst_direction.size() > 0) {
        j["worst_direction"] = std::vector<double>(
            report.worst_direction.data(),
            report.worst_direction.data() + report.worst_direction.size());
    }
    return j;
}

Json to_json(const MechanismOutput& out) {
    Json j;
    j["abstained"] = out.abstained;
    if (!out.abstained) {
        j["output"] = std::vector<double>(out.parameter.data(),
                                          out.parameter.data() + out.parameter.size());
        j["score"] = out.score;
    }
    j["epsilon"] = out.epsilon;
    j["delta"] = out.delta;
    j["seed"] = out.seed;
    if (std::isfinite(out.volume_log_ratio) && out.volume_log_ratio != 0.0) {
        j["volume_log_ratio"] = out.volume_log_ratio;
    }
    return j;
}

Json to_json(const AuditReport& report) {
    return Json{{"max_log_ratio_empirical", report.max_abs_log_ratio_empirical},
                {"max_log_ratio_exact", report.max_abs_log_ratio_exact},
                {"draws", report.draws},
                {"cells_compared", report.cells_compared},
                {"min_count_threshold", report.min_count_threshold}};
}

Json pe_to_json(const PseudoExpectation& pe) {
    Json j;
    j["degree"] = pe.degree();
    Json vars = Json::array();
    for (int v = 0; v < pe.registry().count(); ++v) vars.push_back(pe.registry().name(v));
    j["variables"] = vars;
    Json monomials = Json::array();
    Json values = Json::array();
    for (const Monomial& m : pe.tracked()) {
        Json factors = Json::array();
        for (const auto& [v, e] : m.factors) factors.push_back({{"var", v}, {"exp", e}});
        monomials.push_back(factors);
        values.push_back(pe.value(m));
    }
    j["monomials"] = monomials;
    j["moments"] = values;
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace estlab
