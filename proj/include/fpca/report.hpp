#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "fpca/dataset.hpp"
#include "fpca/initializer.hpp"
#include "fpca/model_selection.hpp"
#include "fpca/optimizer.hpp"
#include "fpca/simulation.hpp"
#include "fpca/spline_basis.hpp"

namespace fpca {

using Json = nlohmann::ordered_json;

inline constexpr const char* kFitSchema = "fpca.fit/1";
inline constexpr const char* kSelectSchema = "fpca.select/1";
inline constexpr const char* kBenchSchema = "fpca.bench/1";
inline constexpr const char* kTruthSchema = "fpca.truth/1";

Json to_json(const VectorXd& v);
Json to_json(const MatrixXd& m);  // list of rows
Json to_json(const CvBreakdown& cv);

/// Fit summary plus eigenfunctions on `grid_size` uniform points.
Json fit_json(const FitReport& fit, const BasisSystem& basis, const SparseDataset& data,
              const MeanEstimate& mean, const std::optional<CvBreakdown>& cv,
              const std::string& cv_note = {}, int grid_size = 201);

Json selection_json(const SelectionResult& result, const SparseDataset& data,
                    const MeanEstimate& mean, int grid_size = 201);

Json benchmark_json(const MetricReport& report, const TruthSpec& spec);

Json truth_json(const GroundTruth& truth);

/// Pretty-printed document with a trailing newline.
std::string dump(const Json& doc);

}  // namespace fpca
