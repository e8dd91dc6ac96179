#include "gki/ehr_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "gki/rng.hpp"

namespace gki {

using json = nlohmann::json;

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2));
}

}  // namespace

Timestamp Timestamp::parse(const std::string& iso) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  const int n = std::sscanf(iso.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
  const bool date_ok = n >= 3 && mo >= 1 && mo <= 12 && d >= 1 && d <= 31;
  const bool time_ok = n == 3 || (n >= 6 && (sep == 'T' || sep == ' ') && h >= 0 && h < 24 &&
                                  mi >= 0 && mi < 60 && s >= 0 && s < 61);
  if (!date_ok || !time_ok) throw DataError("invalid ISO-8601 timestamp '" + iso + "'");
  Timestamp t;
  t.seconds = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
              h * 3600 + mi * 60 + s;
  return t;
}

std::string Timestamp::to_string() const {
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  if (rem == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", y, m, d);
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
  }
  return buf;
}

// ---------------------------------------------------------------------------
// Records

namespace {

const json& require_field(const json& obj, const char* field, const std::string& patient_id) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw DataError("missing required field '" + std::string(field) + "' for patient '" +
                    patient_id + "'");
  }
  return *it;
}

Visit parse_visit(const json& v, const std::string& pid) {
  if (!v.is_object()) throw DataError("visit is not an object for patient '" + pid + "'");
  Visit visit;
  visit.hadm_id = require_field(v, "hadm_id", pid).get<std::string>();
  visit.admittime = Timestamp::parse(require_field(v, "admittime", pid).get<std::string>());
  visit.dischtime = Timestamp::parse(require_field(v, "dischtime", pid).get<std::string>());
  if (auto it = v.find("deathtime"); it != v.end() && !it->is_null()) {
    visit.deathtime = Timestamp::parse(it->get<std::string>());
  }
  visit.gender = require_field(v, "gender", pid).get<std::string>();
  visit.age = require_field(v, "age", pid).get<int>();
  visit.hospital_expire_flag = require_field(v, "hospital_expire_flag", pid).get<bool>();
  visit.icd_codes = require_field(v, "icd_codes", pid).get<std::vector<std::string>>();
  visit.days = require_field(v, "days", pid).get<int>();
  visit.drugs = require_field(v, "drugs", pid).get<std::vector<std::string>>();
  return visit;
}

}  // namespace

void validate_record(const PatientRecord& record) {
  for (const Visit& v : record.history) {
    if (v.dischtime < v.admittime) {
      throw DataError("visit '" + v.hadm_id + "' of patient '" + record.patient_id +
                      "' has dischtime before admittime");
    }
    if (v.days < 0) throw DataError("visit '" + v.hadm_id + "' has negative days");
    if (v.age < 0) throw DataError("visit '" + v.hadm_id + "' has negative age");
  }
}

std::vector<PatientRecord> parse_records(std::istream& in) {
  std::vector<PatientRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + "malformed JSON (" + e.what() + ")");
    }
    try {
      if (!obj.is_object()) throw DataError("record is not a JSON object");
      PatientRecord rec;
      auto pid = obj.find("patient_id");
      if (pid == obj.end()) throw DataError("missing required field 'patient_id'");
      rec.patient_id = pid->is_string() ? pid->get<std::string>() : pid->dump();
      const json& history = require_field(obj, "history", rec.patient_id);
      if (!history.is_array()) throw DataError("'history' is not an array");
      for (const json& v : history) rec.history.push_back(parse_visit(v, rec.patient_id));
      if (auto tag = obj.find("disease_tag"); tag != obj.end() && tag->is_string()) {
        rec.disease_tag = tag->get<std::string>();
      }
      std::stable_sort(rec.history.begin(), rec.history.end(),
                       [](const Visit& a, const Visit& b) { return a.admittime < b.admittime; });
      validate_record(rec);
      out.push_back(std::move(rec));
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    } catch (const json::exception& e) {
      throw DataError(where + "schema violation (" + e.what() + ")");
    }
  }
  return out;
}

void write_records(std::ostream& out, const std::vector<PatientRecord>& records) {
  for (const PatientRecord& r : records) {
    json history = json::array();
    for (const Visit& v : r.history) {
      json jv;
      jv["hadm_id"] = v.hadm_id;
      jv["admittime"] = v.admittime.to_string();
      jv["dischtime"] = v.dischtime.to_string();
      jv["deathtime"] = v.deathtime ? json(v.deathtime->to_string()) : json(nullptr);
      jv["gender"] = v.gender;
      jv["age"] = v.age;
      jv["hospital_expire_flag"] = v.hospital_expire_flag;
      jv["icd_codes"] = v.icd_codes;
      jv["days"] = v.days;
      jv["drugs"] = v.drugs;
      history.push_back(std::move(jv));
    }
    json obj;
    obj["patient_id"] = r.patient_id;
    obj["history"] = std::move(history);
    if (r.disease_tag) obj["disease_tag"] = *r.disease_tag;
    out << obj.dump() << '\n';
  }
}

int assign_label(const PatientRecord& record) {
  for (const Visit& v : record.history) {
    if (v.hospital_expire_flag) return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
  std::erase(tokens_, std::string(kOov));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    index_.emplace(tokens_[i], static_cast<int>(i) + 1);
  }
}

Vocabulary Vocabulary::from_records(const std::vector<PatientRecord>& records) {
  std::set<std::string> tokens;
  for (const PatientRecord& r : records) {
    if (!r.history.empty()) tokens.insert(kGenderPrefix + r.history.front().gender);
    for (const Visit& v : r.history) {
      for (const auto& c : v.icd_codes) tokens.insert(kCodePrefix + c);
      for (const auto& d : v.drugs) tokens.insert(kDrugPrefix + d);
    }
  }
  return Vocabulary(std::vector<std::string>(tokens.begin(), tokens.end()));
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

int Vocabulary::column(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Graphs

Matrix PatientGraph::node_features() const {
  Matrix x = Matrix::Zero(num_nodes(), feature_dim);
  for (int i = 0; i < num_nodes(); ++i) x(i, node_columns[static_cast<std::size_t>(i)]) = 1.0;
  return x;
}

namespace {

class EdgeBuilder {
 public:
  void emit(const std::string& src, const std::string& dst, double weight) {
    weight = std::max(weight, 0.0);
    const int s = node(src);
    const int d = node(dst);
    const auto key = std::make_pair(s, d);
    auto it = edge_index_.find(key);
    if (it == edge_index_.end()) {
      edge_index_.emplace(key, edges_.size());
      edges_.push_back({s, d, weight});
    } else {
      double& w = edges_[it->second].weight;
      w = std::min(w, weight);
    }
  }

  std::vector<std::string> tokens;

  std::vector<Edge> take_edges() { return std::move(edges_); }

 private:
  int node(const std::string& token) {
    auto [it, inserted] = node_index_.emplace(token, static_cast<int>(tokens.size()));
    if (inserted) tokens.push_back(token);
    return it->second;
  }

  std::unordered_map<std::string, int> node_index_;
  std::map<std::pair<int, int>, std::size_t> edge_index_;
  std::vector<Edge> edges_;
};

void connect_drugs_to_codes(EdgeBuilder& b, const Visit& from, const Visit& to, double gap) {
  for (const auto& drug : from.drugs) {
    for (const auto& code : to.icd_codes) b.emit(kDrugPrefix + drug, kCodePrefix + code, gap);
  }
}

}  // namespace

PatientGraph build_graph(const PatientRecord& record, const Vocabulary& vocab,
                         const BuildOptions& options) {
  if (record.history.empty()) {
    throw DataError("patient '" + record.patient_id + "' has no visits");
  }
  const Visit& first = record.history.front();
  if (first.icd_codes.empty()) {
    throw DataError("patient '" + record.patient_id +
                    "': first visit has no diagnoses to anchor the demographic node");
  }

  EdgeBuilder b;
  const std::string demographic = kGenderPrefix + first.gender;
  for (std::size_t idx = 0; idx < record.history.size(); ++idx) {
    const Visit& visit = record.history[idx];
    if (idx == 0) {
      for (const auto& code : visit.icd_codes) {
        b.emit(demographic, kCodePrefix + code, static_cast<double>(first.age));
      }
    }
    if (idx > 0 || options.connect_first_visit_drugs) {
      for (const auto& drug : visit.drugs) {
        for (const auto& code : visit.icd_codes) {
          b.emit(kCodePrefix + code, kDrugPrefix + drug, static_cast<double>(visit.days));
        }
      }
    }
    if (idx == 0) continue;

    const Visit& prev = record.history[idx - 1];
    connect_drugs_to_codes(b, prev, visit, visit.admittime.days_since(prev.dischtime));

    if (idx >= 2) {
      const Visit& prev2 = record.history[idx - 2];
      if (prev.admittime < prev2.dischtime) {
        connect_drugs_to_codes(b, prev2, visit, visit.admittime.days_since(prev2.dischtime));
      }
    }
  }

  PatientGraph g;
  g.graph_id = record.patient_id;
  g.edges = b.take_edges();
  g.node_tokens = std::move(b.tokens);
  g.feature_dim = vocab.size();
  for (const auto& t : g.node_tokens) g.node_columns.push_back(vocab.column(t));
  g.label = assign_label(record);
  g.disease_tag = record.disease_tag;
  return g;
}

void write_graphs(std::ostream& out, const std::vector<PatientGraph>& graphs) {
  for (const PatientGraph& g : graphs) {
    json edges = json::array();
    for (const Edge& e : g.edges) edges.push_back(json::array({e.src, e.dst, e.weight}));
    json obj;
    obj["graph_id"] = g.graph_id;
    obj["tokens"] = g.node_tokens;
    obj["edges"] = std::move(edges);
    obj["label"] = g.label ? json(*g.label) : json(nullptr);
    obj["disease_tag"] = g.disease_tag ? json(*g.disease_tag) : json(nullptr);
    out << obj.dump() << '\n';
  }
}

std::vector<PatientGraph> read_graphs(std::istream& in, const Vocabulary& vocab) {
  std::vector<PatientGraph> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      PatientGraph g;
      g.graph_id = obj.at("graph_id").get<std::string>();
      g.node_tokens = obj.at("tokens").get<std::vector<std::string>>();
      if (g.node_tokens.empty()) throw DataError("graph has no nodes");
      g.feature_dim = vocab.size();
      for (const auto& t : g.node_tokens) g.node_columns.push_back(vocab.column(t));
      for (const json& e : obj.at("edges")) {
        Edge edge{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()};
        if (edge.src < 0 || edge.src >= g.num_nodes() || edge.dst < 0 ||
            edge.dst >= g.num_nodes()) {
          throw DataError("edge endpoint out of range");
        }
        if (!std::isfinite(edge.weight) || edge.weight < 0.0) {
          throw DataError("edge weight must be finite and nonnegative");
        }
        g.edges.push_back(edge);
      }
      if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) g.label = it->get<int>();
      if (auto it = obj.find("disease_tag"); it != obj.end() && !it->is_null()) {
        g.disease_tag = it->get<std::string>();
      }
      out.push_back(std::move(g));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

GraphStats graph_stats(const std::vector<PatientGraph>& graphs) {
  if (graphs.empty()) throw DataError("graph_stats: empty graph list");
  GraphStats s;
  s.count = graphs.size();
  double nodes = 0.0, edges = 0.0;
  for (const PatientGraph& g : graphs) {
    const int e = static_cast<int>(g.edges.size());
    s.max_nodes = std::max(s.max_nodes, g.num_nodes());
    s.max_edges = std::max(s.max_edges, e);
    nodes += g.num_nodes();
    edges += e;
  }
  s.avg_nodes = nodes / static_cast<double>(s.count);
  s.avg_edges = edges / static_cast<double>(s.count);
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic cohort

bool has_risk_motif(const PatientRecord& record) {
  auto contains = [](const std::vector<std::string>& v, const char* code) {
    return std::find(v.begin(), v.end(), code) != v.end();
  };
  for (std::size_t i = 0; i + 1 < record.history.size(); ++i) {
    if (contains(record.history[i].icd_codes, kMotifFirst) &&
        contains(record.history[i + 1].icd_codes, kMotifSecond)) {
      return true;
    }
  }
  return false;
}

namespace {

struct DiseaseFamily {
  const char* tag;
  const char* code_stem;
  const char* drug_stem;
};

constexpr DiseaseFamily kFamilies[] = {
    {"diabetes", "E11.", "metformin_"},
    {"hypertension", "I10.", "lisinopril_"},
    {"hyperlipidemia", "E78.", "statin_"},
};

std::string numbered(const char* stem, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%d", stem, i);
  return buf;
}

void add_unique(std::vector<std::string>& v, std::string s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(std::move(s));
}

// Like add_unique, but a full visit gives up its last code instead of growing.
void place_code(std::vector<std::string>& codes, const char* code, int max_codes) {
  if (std::find(codes.begin(), codes.end(), code) != codes.end()) return;
  if (static_cast<int>(codes.size()) < max_codes) {
    codes.emplace_back(code);
  } else {
    codes.back() = code;
  }
}

}  // namespace

std::vector<PatientRecord> synthesize_cohort(std::uint64_t seed, int n_patients,
                                             const SynthConfig& cfg) {
  if (n_patients < 1) throw DataError("synthesize_cohort: n_patients must be >= 1");
  const Rng master = Rng(seed).stream("synthesis");
  constexpr std::int64_t kDay = 86400;
  const std::int64_t start_2008 = Timestamp::parse("2008-01-01").seconds;
  constexpr int kDurations[] = {7, 14, 30, 90};

  std::vector<PatientRecord> out;
  out.reserve(static_cast<std::size_t>(n_patients));
  for (int p = 0; p < n_patients; ++p) {
    Rng rng = master.stream("patient", static_cast<std::uint64_t>(p));
    const DiseaseFamily& fam = kFamilies[rng.below(3)];
    PatientRecord rec;
    rec.patient_id = numbered("P", 100000 + p);
    rec.disease_tag = fam.tag;

    const std::string gender = rng.bernoulli(0.5) ? "F" : "M";
    const int base_age = rng.between(20, 85);
    const int n_visits = rng.between(1, cfg.max_visits);
    std::int64_t admit = start_2008 + static_cast<std::int64_t>(rng.below(11 * 365)) * kDay;
    std::int64_t last_discharge = admit;
    const std::int64_t first_admit = admit;

    for (int v = 0; v < n_visits; ++v) {
      Visit visit;
      visit.hadm_id = numbered("H", (100000 + p) * 10 + v);
      if (v > 0) {
        if (rng.bernoulli(cfg.overlap_rate)) {
          admit = last_discharge - static_cast<std::int64_t>(rng.between(0, 3)) * kDay;
        } else {
          admit = last_discharge + static_cast<std::int64_t>(rng.between(1, 180)) * kDay;
        }
      }
      const std::int64_t stay = rng.between(1, 14);
      visit.admittime.seconds = admit;
      visit.dischtime.seconds = admit + stay * kDay;
      last_discharge = std::max(last_discharge, visit.dischtime.seconds);
      visit.gender = gender;
      visit.age = base_age + static_cast<int>((admit - first_admit) / (365 * kDay));
      visit.days = kDurations[rng.below(4)];

      const int n_codes = rng.between(1, cfg.max_codes);
      if (v == 0) {
        add_unique(visit.icd_codes, numbered(fam.code_stem, rng.between(0, cfg.n_family_codes - 1)));
      }
      while (static_cast<int>(visit.icd_codes.size()) < n_codes) {
        if (rng.bernoulli(0.4)) {
          add_unique(visit.icd_codes,
                     numbered(fam.code_stem, rng.between(0, cfg.n_family_codes - 1)));
        } else {
          add_unique(visit.icd_codes, numbered("K", rng.between(0, cfg.n_generic_codes - 1)));
        }
      }
      if (rng.bernoulli(cfg.motif_background)) place_code(visit.icd_codes, kMotifFirst, cfg.max_codes);
      if (rng.bernoulli(cfg.motif_background)) place_code(visit.icd_codes, kMotifSecond, cfg.max_codes);

      const int n_drugs = rng.between(0, cfg.max_drugs);
      for (int d = 0; d < n_drugs; ++d) {
        if (rng.bernoulli(0.5)) {
          add_unique(visit.drugs, numbered(fam.drug_stem, rng.between(0, 3)));
        } else {
          add_unique(visit.drugs, numbered("drug_", rng.between(0, cfg.n_drugs - 1)));
        }
      }
      rec.history.push_back(std::move(visit));
    }

    if (n_visits >= 2 && rng.bernoulli(cfg.motif_rate)) {
      const auto t = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n_visits - 1)));
      place_code(rec.history[t].icd_codes, kMotifFirst, cfg.max_codes);
      place_code(rec.history[t + 1].icd_codes, kMotifSecond, cfg.max_codes);
    }

    const double risk = has_risk_motif(rec) ? cfg.motif_mortality : cfg.base_mortality;
    if (rng.bernoulli(risk)) {
      Visit& last = rec.history.back();
      last.hospital_expire_flag = true;
      last.deathtime = last.dischtime;
    }
    std::stable_sort(rec.history.begin(), rec.history.end(),
                     [](const Visit& a, const Visit& b) { return a.admittime < b.admittime; });
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace gki
