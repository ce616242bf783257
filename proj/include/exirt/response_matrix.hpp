#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exirt/log_ingest.hpp"

namespace exirt {

inline constexpr std::int8_t kMissing = -1;

using CellMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Students x items dichotomous scores for one item group. Cells hold 0, 1
/// or kMissing; rows and columns are sorted by id.
struct ResponseMatrix {
  std::string group_id;
  std::vector<std::string> item_ids;
  std::vector<std::string> student_ids;
  CellMatrix cells;

  Eigen::Index n_students() const { return cells.rows(); }
  Eigen::Index n_items() const { return cells.cols(); }

  /// 1.0 where the cell is 1, else 0.0.
  Eigen::MatrixXd scores() const;
  /// 1.0 where the cell is observed, else 0.0.
  Eigen::MatrixXd observed() const;
};

/// 1 iff r >= threshold.
int dichotomize(double r, double threshold = 0.70);

/// Maps exercise ids to groups; exercises not listed go to `default_group`
/// when one is set. JSON form: {"groups": {"ex": "ch", ...}, "default_group": "misc"}.
struct Grouping {
  std::map<std::string, std::string> exercise_to_group;
  std::optional<std::string> default_group;

  static Grouping from_json(const nlohmann::json& j);
  static Grouping load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
};

struct MatrixSet {
  std::vector<ResponseMatrix> matrices;  // sorted by group_id
  std::vector<std::string> skipped_groups;
  std::vector<std::string> warnings;
};

/// Builds one matrix per group. Without a grouping the summaries' module_id
/// is used. Throws UnmappedExercise when a grouping is given, an exercise is
/// not listed and there is no default group.
MatrixSet build_matrices(std::span<const StudentExerciseSummary> summaries,
                         const std::optional<Grouping>& grouping, double threshold = 0.70);

/// True for columns whose observed cells are all 0 or all 1 (or none).
std::vector<bool> degenerate_items(const ResponseMatrix& matrix);

void write_matrix_csv(std::ostream& out, const ResponseMatrix& matrix);
ResponseMatrix read_matrix_csv(std::istream& in, std::string group_id);

}  // namespace exirt
