#include "exirt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "exirt/errors.hpp"

namespace exirt {
namespace {

std::string padded_id(std::string_view prefix, std::int64_t index, std::int64_t count) {
  const auto width = std::max<std::size_t>(4, std::to_string(count).size());
  auto digits = std::to_string(index);
  return std::string(prefix) + std::string(width - std::min(width, digits.size()), '0') + digits;
}

std::vector<ExerciseSpec> sorted_by_id(std::span<const ExerciseSpec> exercises) {
  std::vector<ExerciseSpec> out(exercises.begin(), exercises.end());
  std::sort(out.begin(), out.end(),
            [](const auto& x, const auto& y) { return x.item.item_id < y.item.item_id; });
  return out;
}

const Timestamp kEpoch = std::chrono::sys_days{std::chrono::year{2020} / 9 / 1};

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, Stream purpose, std::uint64_t student,
                            std::uint64_t item) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose),
                    static_cast<std::uint32_t>(student), static_cast<std::uint32_t>(student >> 32),
                    static_cast<std::uint32_t>(item), static_cast<std::uint32_t>(item >> 32)};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& engine) {
  const double u1 = 1.0 - uniform01(engine);  // (0, 1]
  const double u2 = uniform01(engine);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void validate(const CohortSpec& spec) {
  if (spec.n_students <= 0) throw Error(ErrorCode::InvalidSpec, "n_students must be positive");
  if (!(spec.ability_sd > 0) || !std::isfinite(spec.ability_sd) || !std::isfinite(spec.ability_mean))
    throw Error(ErrorCode::InvalidSpec, "ability_sd must be positive and finite");
}

void validate(const BehaviorSpec& spec) {
  if (spec.max_attempts < 1) throw Error(ErrorCode::InvalidSpec, "max_attempts must be at least 1");
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(spec.retry_prob) || !prob(spec.hint_propensity))
    throw Error(ErrorCode::InvalidSpec, "behavior probabilities must lie in [0, 1]");
}

std::vector<SimulatedStudent> sample_cohort(const CohortSpec& spec) {
  validate(spec);
  auto engine = make_stream(spec.seed, Stream::Cohort);
  std::vector<SimulatedStudent> out;
  out.reserve(static_cast<std::size_t>(spec.n_students));
  for (std::int64_t s = 0; s < spec.n_students; ++s) {
    out.push_back({padded_id("s", s + 1, spec.n_students),
                   spec.ability_mean + spec.ability_sd * standard_normal(engine)});
  }
  return out;
}

ResponseMatrix generate_responses(std::span<const SimulatedStudent> cohort,
                                  std::span<const ItemParameters> items, std::uint64_t seed,
                                  double missing_rate) {
  if (!(missing_rate >= 0.0 && missing_rate <= 1.0))
    throw Error(ErrorCode::InvalidSpec, "missing_rate must lie in [0, 1]");
  std::vector<ItemParameters> sorted(items.begin(), items.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.item_id < y.item_id; });

  ResponseMatrix m;
  m.group_id = "simulated";
  for (const auto& st : cohort) m.student_ids.push_back(st.student_id);
  for (const auto& it : sorted) m.item_ids.push_back(it.item_id);
  m.cells.resize(static_cast<Eigen::Index>(cohort.size()), static_cast<Eigen::Index>(sorted.size()));
  for (std::size_t s = 0; s < cohort.size(); ++s) {
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      auto outcome = make_stream(seed, Stream::Outcome, s, j);
      const double p = icc_prob(sorted[j].a, sorted[j].b, cohort[s].theta);
      std::int8_t cell = uniform01(outcome) < p ? 1 : 0;
      if (missing_rate > 0.0) {
        auto missing = make_stream(seed, Stream::Missing, s, j);
        if (uniform01(missing) < missing_rate) cell = kMissing;
      }
      m.cells(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = cell;
    }
  }
  return m;
}

SimulatedLog generate_event_log(std::span<const SimulatedStudent> cohort,
                                std::span<const ExerciseSpec> exercises, const BehaviorSpec& behavior,
                                std::uint64_t seed) {
  validate(behavior);
  const auto sorted = sorted_by_id(exercises);
  SimulatedLog log;
  for (std::size_t s = 0; s < cohort.size(); ++s) {
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      const auto& ex = sorted[j];
      auto outcome = make_stream(seed, Stream::Outcome, s, j);
      auto actions = make_stream(seed, Stream::Behavior, s, j);
      const double p = icc_prob(ex.item.a, ex.item.b, cohort[s].theta);
      StudentExerciseSummary tally{cohort[s].student_id, ex.item.item_id, ex.module_id};

      const auto slot = static_cast<std::int64_t>(s * sorted.size() + j);
      std::int64_t seq = 0;
      auto emit = [&](EventKind kind, std::optional<bool> correct) {
        const auto ts = kEpoch + std::chrono::seconds{slot * 3600 + seq * 10};
        log.events.push_back({cohort[s].student_id, ex.item.item_id, ex.module_id, ts, kind, correct});
        ++seq;
      };

      for (int attempt = 1;; ++attempt) {
        if (uniform01(actions) < behavior.hint_propensity) {
          emit(EventKind::Hint, std::nullopt);
          ++tally.n_hints;
        }
        const bool correct = uniform01(outcome) < p;
        emit(EventKind::Attempt, correct);
        ++tally.n_attempts;
        ++(correct ? tally.n_correct : tally.n_wrong);
        if (correct || attempt >= behavior.max_attempts) break;
        if (!(uniform01(actions) < behavior.retry_prob)) break;
      }
      log.tallies.push_back(std::move(tally));
    }
  }
  return log;
}

ParameterRecovery compare_values(std::span<const double> truth, std::span<const double> fitted) {
  if (truth.size() != fitted.size())
    throw Error(ErrorCode::LengthMismatch, "truth and fitted lists differ in length");
  if (truth.empty()) throw Error(ErrorCode::LengthMismatch, "empty parameter lists");
  const auto n = static_cast<double>(truth.size());
  double sq = 0.0, max_abs = 0.0, mean_t = 0.0, mean_f = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = fitted[i] - truth[i];
    sq += e * e;
    max_abs = std::max(max_abs, std::abs(e));
    mean_t += truth[i];
    mean_f += fitted[i];
  }
  mean_t /= n;
  mean_f /= n;
  double stt = 0.0, sff = 0.0, stf = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double dt = truth[i] - mean_t;
    const double df = fitted[i] - mean_f;
    stt += dt * dt;
    sff += df * df;
    stf += dt * df;
  }
  ParameterRecovery r;
  r.rmse = std::sqrt(sq / n);
  r.max_abs_error = max_abs;
  r.correlation = (stt > 0 && sff > 0) ? stf / std::sqrt(stt * sff) : std::nan("");
  return r;
}

RecoveryStats recovery_report(std::span<const ItemParameters> truth,
                              std::span<const ItemParameters> fitted) {
  if (truth.size() != fitted.size())
    throw Error(ErrorCode::LengthMismatch, "truth and fitted parameter lists differ in length");
  std::vector<double> ta, tb, fa, fb;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ta.push_back(truth[i].a);
    tb.push_back(truth[i].b);
    fa.push_back(fitted[i].a);
    fb.push_back(fitted[i].b);
  }
  return {truth.size(), compare_values(ta, fa), compare_values(tb, fb)};
}

nlohmann::ordered_json to_json(const RecoveryStats& stats) {
  auto one = [](const ParameterRecovery& r) {
    nlohmann::ordered_json j;
    j["rmse"] = r.rmse;
    j["correlation"] = std::isnan(r.correlation) ? nlohmann::ordered_json() : nlohmann::ordered_json(r.correlation);
    j["max_abs_error"] = r.max_abs_error;
    return j;
  };
  nlohmann::ordered_json j;
  j["n_items"] = stats.n_items;
  j["a"] = one(stats.a);
  j["b"] = one(stats.b);
  return j;
}

Scenario Scenario::from_json(const nlohmann::json& j) {
  Scenario sc;
  try {
    const auto& c = j.at("cohort");
    sc.cohort.n_students = c.at("n_students").get<std::int64_t>();
    sc.cohort.ability_mean = c.value("ability_mean", 0.0);
    sc.cohort.ability_sd = c.value("ability_sd", 1.0);
    sc.cohort.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("behavior")) {
      const auto& b = j.at("behavior");
      sc.behavior.max_attempts = b.value("max_attempts", sc.behavior.max_attempts);
      sc.behavior.retry_prob = b.value("retry_prob", sc.behavior.retry_prob);
      sc.behavior.hint_propensity = b.value("hint_propensity", sc.behavior.hint_propensity);
    }
    if (j.contains("log_format")) {
      const auto fmt = j.at("log_format").get<std::string>();
      if (fmt == "csv") {
        sc.log_format = LogFormat::Csv;
      } else if (fmt == "jsonl") {
        sc.log_format = LogFormat::Jsonl;
      } else {
        throw Error(ErrorCode::InvalidSpec, "log_format must be csv or jsonl");
      }
    }
    if (j.contains("items")) {
      for (const auto& it : j.at("items")) {
        ExerciseSpec ex;
        ex.item.item_id = it.at("item_id").get<std::string>();
        ex.item.a = it.at("a").get<double>();
        ex.item.b = it.at("b").get<double>();
        ex.module_id = it.value("module_id", std::string("ch1"));
        sc.exercises.push_back(std::move(ex));
      }
    } else if (j.contains("random_items")) {
      const auto& r = j.at("random_items");
      const auto count = r.at("count").get<std::int64_t>();
      const auto a_range = r.value("a_range", std::vector<double>{0.5, 2.0});
      const auto b_range = r.value("b_range", std::vector<double>{-2.0, 2.0});
      const auto n_modules = r.value("n_modules", std::int64_t{1});
      if (count < 1 || n_modules < 1 || a_range.size() != 2 || b_range.size() != 2 ||
          !(a_range[1] >= a_range[0]) || !(b_range[1] >= b_range[0]))
        throw Error(ErrorCode::InvalidSpec, "random_items: bad count, ranges or n_modules");
      auto engine = make_stream(sc.cohort.seed, Stream::Items);
      for (std::int64_t k = 0; k < count; ++k) {
        ExerciseSpec ex;
        ex.item.item_id = padded_id("ex", k + 1, count);
        ex.item.a = a_range[0] + (a_range[1] - a_range[0]) * uniform01(engine);
        ex.item.b = b_range[0] + (b_range[1] - b_range[0]) * uniform01(engine);
        ex.module_id = "ch" + std::to_string(k % n_modules + 1);
        sc.exercises.push_back(std::move(ex));
      }
    } else {
      throw Error(ErrorCode::InvalidSpec, "scenario needs 'items' or 'random_items'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("scenario: ") + e.what());
  }
  validate(sc.cohort);
  validate(sc.behavior);
  if (sc.exercises.empty()) throw Error(ErrorCode::InvalidSpec, "scenario has no items");
  return sc;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableStream, "cannot open scenario '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("scenario: ") + e.what());
  }
  return from_json(j);
}

}  // namespace exirt
