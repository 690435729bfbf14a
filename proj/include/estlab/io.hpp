#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "estlab/estimators.hpp"
#include "estlab/goodness.hpp"
#include "estlab/mechanism.hpp"
#include "estlab/model.hpp"
#include "estlab/pseudoexpectation.hpp"

namespace estlab {

using Json = nlohmann::json;

std::string dataset_to_csv(const LabeledDataset& data);
std::string dataset_to_csv(const PointDataset& data);
LabeledDataset labeled_from_csv(const std::string& text);
PointDataset points_from_csv(const std::string& text);

// JSON envelope carrying the dataset, optional instance metadata, and the
// corruption mask
Json dataset_envelope(const LabeledDataset& data, const Json& instance_meta,
                      const std::optional<CorruptionMask>& mask);
Json dataset_envelope(const PointDataset& data, const Json& instance_meta,
                      const std::optional<CorruptionMask>& mask);

Json to_json(const EstimateReport& report);
Json to_json(const GoodnessReport& report);
Json to_json(const MechanismOutput& out);
Json to_json(const AuditReport& report);

// documented schema: variables, monomial table, moment vector
Json pe_to_json(const PseudoExpectation& pe);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace estlab
