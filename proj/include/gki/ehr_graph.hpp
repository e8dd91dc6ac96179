#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gki/numeric.hpp"

namespace gki {

/// Seconds since 1970-01-01T00:00:00 (UTC, no leap seconds).
struct Timestamp {
  std::int64_t seconds = 0;

  static Timestamp parse(const std::string& iso);
  std::string to_string() const;
  double days_since(const Timestamp& other) const {
    return static_cast<double>(seconds - other.seconds) / 86400.0;
  }
  auto operator<=>(const Timestamp&) const = default;
};

struct Visit {
  std::string hadm_id;
  Timestamp admittime;
  Timestamp dischtime;
  std::optional<Timestamp> deathtime;
  std::string gender;
  int age = 0;
  bool hospital_expire_flag = false;
  std::vector<std::string> icd_codes;
  int days = 0;
  std::vector<std::string> drugs;
};

struct PatientRecord {
  std::string patient_id;
  std::vector<Visit> history;  // ascending by admittime
  std::optional<std::string> disease_tag;
};

/// Parses JSON-lines patient histories. Visits are re-sorted by admittime,
/// unknown fields are ignored and blank lines skipped. Throws DataError with
/// the line number on malformed input.
std::vector<PatientRecord> parse_records(std::istream& in);
void write_records(std::ostream& out, const std::vector<PatientRecord>& records);
void validate_record(const PatientRecord& record);

/// 1 iff any visit carries the in-hospital mortality flag.
int assign_label(const PatientRecord& record);

// Node token namespaces, so a drug and a diagnosis sharing a name stay distinct.
inline constexpr const char* kGenderPrefix = "gender:";
inline constexpr const char* kCodePrefix = "icd:";
inline constexpr const char* kDrugPrefix = "drug:";

/// Sorted token list with a reserved out-of-vocabulary column 0.
class Vocabulary {
 public:
  static constexpr const char* kOov = "<oov>";

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  static Vocabulary from_records(const std::vector<PatientRecord>& records);
  static Vocabulary load(std::istream& in);
  void save(std::ostream& out) const;

  /// Column of `token`; 0 for unknown tokens.
  int column(const std::string& token) const;
  /// Number of columns including the OOV column.
  int size() const { return static_cast<int>(tokens_.size()) + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
};

struct Edge {
  int src = 0;
  int dst = 0;
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

struct PatientGraph {
  std::string graph_id;
  std::vector<std::string> node_tokens;
  std::vector<int> node_columns;  // one-hot column per node
  int feature_dim = 0;            // vocabulary size D
  std::vector<Edge> edges;
  std::optional<int> label;
  std::optional<std::string> disease_tag;

  int num_nodes() const { return static_cast<int>(node_tokens.size()); }
  /// n x D one-hot feature matrix.
  Matrix node_features() const;

  bool operator==(const PatientGraph&) const = default;
};

struct BuildOptions {
  /// Emit diagnosis -> drug edges for the first visit as well. Off reproduces
  /// the construction pseudocode literally, which skips them.
  bool connect_first_visit_drugs = true;
};

/// Builds the directed weighted patient graph: demographic node to first-visit
/// diagnoses (weight = age), diagnosis to drug within a visit (weight = days),
/// previous-visit drug to current diagnosis (weight = gap in days) and, when
/// the previous admission overlaps the one before it, that earlier visit's
/// drugs to current diagnoses. Negative gaps clamp to 0; duplicate
/// (src, dst) pairs keep the smallest weight.
PatientGraph build_graph(const PatientRecord& record, const Vocabulary& vocab,
                         const BuildOptions& options = {});

void write_graphs(std::ostream& out, const std::vector<PatientGraph>& graphs);
/// Reads graph JSON-lines and resolves one-hot columns against `vocab`.
std::vector<PatientGraph> read_graphs(std::istream& in, const Vocabulary& vocab);

struct GraphStats {
  std::size_t count = 0;
  int max_nodes = 0;
  double avg_nodes = 0.0;
  int max_edges = 0;
  double avg_edges = 0.0;
};

GraphStats graph_stats(const std::vector<PatientGraph>& graphs);

struct SynthConfig {
  int n_generic_codes = 40;
  int n_family_codes = 8;  // per disease family
  int n_drugs = 24;
  int max_visits = 8;
  int max_codes = 5;
  int max_drugs = 3;
  double motif_rate = 0.08;        // patients receiving an injected risk motif
  double motif_background = 0.05;  // per-visit chance of a stray motif code
  double base_mortality = 0.05;
  double motif_mortality = 0.65;
  double overlap_rate = 0.1;       // chance a visit starts before the last discharge
};

/// Deterministic synthetic cohort. Mortality risk is raised by a motif: the
/// code pair (kMotifFirst in one visit, kMotifSecond in the next).
std::vector<PatientRecord> synthesize_cohort(std::uint64_t seed, int n_patients,
                                             const SynthConfig& cfg = {});

inline constexpr const char* kMotifFirst = "R65.20";
inline constexpr const char* kMotifSecond = "N17.9";

bool has_risk_motif(const PatientRecord& record);

}  // namespace gki
