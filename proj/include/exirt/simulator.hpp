#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "exirt/irt_model.hpp"
#include "exirt/log_ingest.hpp"
#include "exirt/response_matrix.hpp"

namespace exirt {

// Random numbers come from std::mt19937_64, whose output sequence is fixed
// by the standard. Each (purpose, student, item) triple gets its own engine
// seeded through std::seed_seq, so any subset of the simulation can be
// regenerated independently. Uniforms take the top 53 bits; normals use the
// cosine branch of Box-Muller.

struct CohortSpec {
  std::int64_t n_students = 0;
  double ability_mean = 0.0;
  double ability_sd = 1.0;
  std::uint64_t seed = 0;
};

struct SimulatedStudent {
  std::string student_id;
  double theta = 0.0;
};

struct BehaviorSpec {
  int max_attempts = 1;
  double retry_prob = 1.0;       // chance of another attempt after a wrong one
  double hint_propensity = 0.0;  // chance of a hint before each attempt
};

/// An item together with the module its exercise belongs to.
struct ExerciseSpec {
  ItemParameters item;
  std::string module_id;
};

/// Stream tags keep the draws for different purposes independent.
enum class Stream : std::uint32_t { Cohort = 1, Outcome = 2, Missing = 3, Behavior = 4, Items = 5 };

std::mt19937_64 make_stream(std::uint64_t seed, Stream purpose, std::uint64_t student = 0,
                            std::uint64_t item = 0);
double uniform01(std::mt19937_64& engine);
double standard_normal(std::mt19937_64& engine);

/// Student ids are zero-padded ("s0001") so lexicographic order matches
/// generation order.
std::vector<SimulatedStudent> sample_cohort(const CohortSpec& spec);

/// Bernoulli(P(theta)) responses; items appear sorted by id. A cell is
/// missing with probability missing_rate.
ResponseMatrix generate_responses(std::span<const SimulatedStudent> cohort,
                                  std::span<const ItemParameters> items, std::uint64_t seed,
                                  double missing_rate = 0.0);

struct SimulatedLog {
  std::vector<InteractionEvent> events;
  std::vector<StudentExerciseSummary> tallies;  // counted while generating
};

/// Event sequence per (student, exercise): before each attempt a hint with
/// probability hint_propensity; each attempt correct with P(theta) using
/// the same draws as generate_responses; after a wrong attempt another one
/// follows with probability retry_prob until max_attempts.
SimulatedLog generate_event_log(std::span<const SimulatedStudent> cohort,
                                std::span<const ExerciseSpec> exercises, const BehaviorSpec& behavior,
                                std::uint64_t seed);

struct ParameterRecovery {
  double rmse = 0.0;
  double correlation = 0.0;  // NaN when either side has zero variance
  double max_abs_error = 0.0;
};

struct RecoveryStats {
  std::size_t n_items = 0;
  ParameterRecovery a;
  ParameterRecovery b;
};

ParameterRecovery compare_values(std::span<const double> truth, std::span<const double> fitted);
/// Lists are aligned by position; throws LengthMismatch otherwise.
RecoveryStats recovery_report(std::span<const ItemParameters> truth,
                              std::span<const ItemParameters> fitted);
nlohmann::ordered_json to_json(const RecoveryStats& stats);

/// Scenario file: cohort, seed, behavior and either an explicit item list
/// or a random_items block.
struct Scenario {
  CohortSpec cohort;
  BehaviorSpec behavior;
  std::vector<ExerciseSpec> exercises;
  LogFormat log_format = LogFormat::Csv;

  static Scenario from_json(const nlohmann::json& j);
  static Scenario load(const std::filesystem::path& path);
};

void validate(const CohortSpec& spec);
void validate(const BehaviorSpec& spec);

}  // namespace exirt
