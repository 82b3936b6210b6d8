#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fpca {

struct Subject {
  std::string id;
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const noexcept { return times.size(); }
};

/// Sparse longitudinal sample. Times are on [0, 1]; (time_min, time_max) are
/// the original endpoints mapped to 0 and 1.
struct SparseDataset {
  std::vector<Subject> subjects;
  double time_min = 0.0;
  double time_max = 1.0;

  std::size_t num_subjects() const noexcept { return subjects.size(); }
  std::size_t num_points() const noexcept;

  double to_original(double t) const noexcept { return time_min + t * (time_max - time_min); }

  /// Throws DataError when an invariant is violated (empty subject, length
  /// mismatch, time outside [0, 1], non-finite value, duplicate id).
  void validate() const;
};

/// Reads `subject_id,t,y` rows. Rows are grouped by subject in order of first
/// appearance. Times are mapped affinely to [0, 1]; when they already lie in
/// [0, 1] the map is the identity.
SparseDataset load_csv(const std::string& path);
SparseDataset parse_csv(const std::string& text);

/// Writes the dataset in its original time scale with round-trip precision.
void save_csv(const SparseDataset& data, const std::string& path);
std::string format_csv(const SparseDataset& data);

}  // namespace fpca
