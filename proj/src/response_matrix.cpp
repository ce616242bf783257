#include "exirt/response_matrix.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "exirt/csv.hpp"

namespace exirt {

Eigen::MatrixXd ResponseMatrix::scores() const { return (cells.array() == 1).cast<double>(); }

Eigen::MatrixXd ResponseMatrix::observed() const {
  return (cells.array() != kMissing).cast<double>();
}

int dichotomize(double r, double threshold) { return r >= threshold ? 1 : 0; }

Grouping Grouping::from_json(const nlohmann::json& j) {
  Grouping g;
  try {
    if (j.contains("groups")) {
      for (const auto& [exercise, group] : j.at("groups").items())
        g.exercise_to_group[exercise] = group.get<std::string>();
    }
    if (j.contains("default_group") && !j.at("default_group").is_null())
      g.default_group = j.at("default_group").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("grouping: ") + e.what());
  }
  return g;
}

Grouping Grouping::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableStream, "cannot open grouping '" + path.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("grouping: ") + e.what());
  }
}

nlohmann::ordered_json Grouping::to_json() const {
  nlohmann::ordered_json j;
  j["groups"] = nlohmann::ordered_json::object();
  for (const auto& [exercise, group] : exercise_to_group) j["groups"][exercise] = group;
  j["default_group"] = default_group ? nlohmann::ordered_json(*default_group) : nlohmann::ordered_json();
  return j;
}

MatrixSet build_matrices(std::span<const StudentExerciseSummary> summaries,
                         const std::optional<Grouping>& grouping, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorCode::OutOfRange, "threshold must lie in (0, 1]");

  struct GroupData {
    std::set<std::string> items;
    std::set<std::string> students;
    std::set<std::string> all_items;
    std::vector<const StudentExerciseSummary*> rows;
  };
  std::map<std::string, GroupData> groups;
  std::set<std::string> unmapped;

  for (const auto& s : summaries) {
    std::string group = s.module_id;
    if (grouping) {
      if (auto it = grouping->exercise_to_group.find(s.exercise_id);
          it != grouping->exercise_to_group.end()) {
        group = it->second;
      } else if (grouping->default_group) {
        group = *grouping->default_group;
      } else {
        unmapped.insert(s.exercise_id);
        continue;
      }
    }
    auto& g = groups[group];
    g.all_items.insert(s.exercise_id);
    if (s.n_attempts > 0) {
      g.items.insert(s.exercise_id);
      g.students.insert(s.student_id);
      g.rows.push_back(&s);
    }
  }
  if (!unmapped.empty()) {
    std::string names;
    for (const auto& e : unmapped) names += (names.empty() ? "" : ", ") + e;
    throw Error(ErrorCode::UnmappedExercise, "exercises without a group: " + names);
  }

  MatrixSet out;
  for (auto& [group_id, g] : groups) {
    for (const auto& item : g.all_items) {
      if (!g.items.count(item))
        out.warnings.push_back(group_id + ": exercise '" + item + "' has no attempts, left out");
    }
    if (g.rows.empty()) {
      out.skipped_groups.push_back(group_id);
      out.warnings.push_back(group_id + ": " + std::string(to_string(ErrorCode::EmptyGroup)) +
                             ", no observed cells");
      continue;
    }
    ResponseMatrix m;
    m.group_id = group_id;
    m.item_ids.assign(g.items.begin(), g.items.end());
    m.student_ids.assign(g.students.begin(), g.students.end());
    std::map<std::string, Eigen::Index> item_col;
    std::map<std::string, Eigen::Index> student_row;
    for (std::size_t i = 0; i < m.item_ids.size(); ++i) item_col[m.item_ids[i]] = static_cast<Eigen::Index>(i);
    for (std::size_t i = 0; i < m.student_ids.size(); ++i)
      student_row[m.student_ids[i]] = static_cast<Eigen::Index>(i);
    m.cells = CellMatrix::Constant(static_cast<Eigen::Index>(m.student_ids.size()),
                                   static_cast<Eigen::Index>(m.item_ids.size()), kMissing);
    for (const auto* s : g.rows) {
      m.cells(student_row[s->student_id], item_col[s->exercise_id]) =
          static_cast<std::int8_t>(dichotomize(*s->r(), threshold));
    }
    out.matrices.push_back(std::move(m));
  }
  return out;
}

std::vector<bool> degenerate_items(const ResponseMatrix& matrix) {
  std::vector<bool> out(static_cast<std::size_t>(matrix.n_items()));
  for (Eigen::Index j = 0; j < matrix.n_items(); ++j) {
    const auto col = matrix.cells.col(j).array();
    const auto ones = (col == 1).count();
    const auto zeros = (col == 0).count();
    out[static_cast<std::size_t>(j)] = ones == 0 || zeros == 0;
  }
  return out;
}

void write_matrix_csv(std::ostream& out, const ResponseMatrix& matrix) {
  out << csv::kSchemaComment << '\n';
  std::vector<std::string> header{"student_id"};
  header.insert(header.end(), matrix.item_ids.begin(), matrix.item_ids.end());
  out << csv::join(header) << '\n';
  for (Eigen::Index s = 0; s < matrix.n_students(); ++s) {
    std::vector<std::string> row{matrix.student_ids[static_cast<std::size_t>(s)]};
    for (Eigen::Index j = 0; j < matrix.n_items(); ++j) {
      const auto v = matrix.cells(s, j);
      row.push_back(v == kMissing ? "NA" : std::to_string(v));
    }
    out << csv::join(row) << '\n';
  }
}

ResponseMatrix read_matrix_csv(std::istream& in, std::string group_id) {
  const auto t = csv::read_table(in);
  if (t.header.empty() || t.header.front() != "student_id")
    throw Error(ErrorCode::SchemaMismatch, "matrix CSV must start with a student_id column");
  ResponseMatrix m;
  m.group_id = std::move(group_id);
  m.item_ids.assign(t.header.begin() + 1, t.header.end());
  m.cells.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(m.item_ids.size()));
  for (std::size_t s = 0; s < t.rows.size(); ++s) {
    m.student_ids.push_back(t.rows[s][0]);
    for (std::size_t j = 0; j < m.item_ids.size(); ++j) {
      const auto& cell = t.rows[s][j + 1];
      std::int8_t v;
      if (cell == "NA") {
        v = kMissing;
      } else if (cell == "0" || cell == "1") {
        v = static_cast<std::int8_t>(cell[0] - '0');
      } else {
        throw Error(ErrorCode::MalformedRow, "matrix cell must be 0, 1 or NA, got '" + cell + "'");
      }
      m.cells(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return m;
}

}  // namespace exirt
