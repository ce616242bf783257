#include "exirt/report_io.hpp"

#include <istream>
#include <ostream>

#include "exirt/csv.hpp"
#include "exirt/errors.hpp"

namespace exirt {
namespace {

std::string opt_double(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}

bool parse_bool(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw Error(ErrorCode::SchemaMismatch, "expected true or false, got '" + text + "'");
}

}  // namespace

void write_parameters_csv(std::ostream& out, std::span<const ItemParameters> items) {
  out << csv::kSchemaComment << '\n';
  out << "item_id,a,b,se_a,se_b,degenerate\n";
  for (const auto& p : items) {
    out << csv::join({p.item_id, csv::format_double(p.a), csv::format_double(p.b), opt_double(p.se_a),
                      opt_double(p.se_b), p.degenerate ? "true" : "false"})
        << '\n';
  }
}

nlohmann::ordered_json parameters_json(std::span<const ItemParameters> items) {
  nlohmann::ordered_json j;
  j["schema_version"] = csv::kSchemaVersion;
  j["items"] = nlohmann::ordered_json::array();
  for (const auto& p : items) {
    nlohmann::ordered_json item;
    item["item_id"] = p.item_id;
    item["a"] = p.a;
    item["b"] = p.b;
    item["se_a"] = opt_json(p.se_a);
    item["se_b"] = opt_json(p.se_b);
    item["degenerate"] = p.degenerate;
    j["items"].push_back(std::move(item));
  }
  return j;
}

std::vector<ItemParameters> read_parameters(std::istream& in, bool json) {
  std::vector<ItemParameters> out;
  try {
    if (json) {
      const auto j = nlohmann::json::parse(in);
      if (!j.contains("items") || !j["items"].is_array())
        throw Error(ErrorCode::SchemaMismatch, "parameters JSON lacks an 'items' array");
      for (const auto& item : j["items"]) {
        ItemParameters p;
        p.item_id = item.at("item_id").get<std::string>();
        p.a = item.at("a").get<double>();
        p.b = item.at("b").get<double>();
        if (item.contains("se_a") && !item["se_a"].is_null()) p.se_a = item["se_a"].get<double>();
        if (item.contains("se_b") && !item["se_b"].is_null()) p.se_b = item["se_b"].get<double>();
        p.degenerate = item.value("degenerate", false);
        out.push_back(std::move(p));
      }
      return out;
    }
    const auto t = csv::read_table(in);
    const std::vector<std::string> expected{"item_id", "a", "b", "se_a", "se_b", "degenerate"};
    if (t.header != expected) throw Error(ErrorCode::SchemaMismatch, "unexpected parameters header");
    for (const auto& f : t.rows) {
      ItemParameters p;
      p.item_id = f[0];
      p.a = csv::parse_double(f[1]);
      p.b = csv::parse_double(f[2]);
      if (!f[3].empty()) p.se_a = csv::parse_double(f[3]);
      if (!f[4].empty()) p.se_b = csv::parse_double(f[4]);
      p.degenerate = parse_bool(f[5]);
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("parameters JSON: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaMismatch) throw;
    throw Error(ErrorCode::SchemaMismatch, e.what());
  }
  return out;
}

void write_abilities_csv(std::ostream& out, std::span<const AbilityEstimate> abilities) {
  out << csv::kSchemaComment << '\n';
  out << "student_id,theta,se_theta\n";
  for (const auto& a : abilities)
    out << csv::join({a.student_id, csv::format_double(a.theta), csv::format_double(a.se_theta)}) << '\n';
}

nlohmann::ordered_json to_json(const FitDiagnostics& d) {
  nlohmann::ordered_json j;
  j["schema_version"] = csv::kSchemaVersion;
  j["group_id"] = d.group_id;
  j["n_iterations"] = d.n_iterations;
  j["log_likelihood"] = d.log_likelihood;
  j["converged"] = d.converged;
  j["excluded_items"] = d.excluded_items;
  j["trace"] = d.trace;
  return j;
}

}  // namespace exirt
