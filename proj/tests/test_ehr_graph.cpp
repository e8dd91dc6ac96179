#include <doctest.h>

#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "gki/ehr_graph.hpp"

using namespace gki;
using json = nlohmann::json;

namespace {

json visit(const std::string& id, const std::string& admit, const std::string& disch,
           std::vector<std::string> codes, std::vector<std::string> drugs, int days, bool flag = false,
           int age = 47, const std::string& gender = "F") {
  return json{{"hadm_id", id},       {"admittime", admit},     {"dischtime", disch},
              {"deathtime", nullptr}, {"gender", gender},       {"age", age},
              {"hospital_expire_flag", flag}, {"icd_codes", codes}, {"days", days},
              {"drugs", drugs}};
}

PatientRecord one(const json& obj) {
  std::istringstream in(obj.dump() + "\n");
  auto recs = parse_records(in);
  REQUIRE(recs.size() == 1);
  return recs[0];
}

using Triple = std::tuple<std::string, std::string, double>;

std::multiset<Triple> triples(const PatientGraph& g) {
  std::multiset<Triple> out;
  for (const auto& e : g.edges) out.insert({g.node_tokens[e.src], g.node_tokens[e.dst], e.weight});
  return out;
}

PatientRecord worked_example() {
  return one(json{{"patient_id", "p1"},
                  {"history",
                   {visit("h1", "2010-01-01", "2010-01-31", {"D1", "D2"}, {"R0"}, 30),
                    visit("h2", "2010-03-02", "2010-03-16", {"D3"}, {"R1"}, 14, false, 47)}}});
}

}  // namespace

TEST_CASE("parse_records: empty stream") {
  std::istringstream in("");
  CHECK(parse_records(in).empty());
}

TEST_CASE("parse_records: visits re-sorted ascending") {
  const auto r = one(json{{"patient_id", "p"},
                          {"history",
                           {visit("late", "2012-05-01", "2012-05-03", {"A"}, {}, 2),
                            visit("early", "2011-01-01", "2011-01-02", {"B"}, {}, 1)}},
                          {"extra_field", 5}});
  REQUIRE(r.history.size() == 2);
  CHECK(r.history[0].hadm_id == "early");
  CHECK(r.history[1].hadm_id == "late");
}

TEST_CASE("parse_records: dischtime before admittime names the hadm_id") {
  std::istringstream in(json{{"patient_id", "p"},
                             {"history", {visit("H77", "2012-05-03", "2012-05-01", {"A"}, {}, 0)}}}
                            .dump());
  try {
    parse_records(in);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("H77") != std::string::npos);
  }
}

TEST_CASE("parse_records: malformed line reports its number") {
  std::istringstream in(json{{"patient_id", "p"}, {"history", json::array()}}.dump() + "\n{not json\n");
  try {
    parse_records(in);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("parse_records: missing field names field and patient") {
  json v = visit("h", "2012-05-01", "2012-05-02", {"A"}, {}, 1);
  v.erase("drugs");
  std::istringstream in(json{{"patient_id", "P123"}, {"history", {v}}}.dump());
  try {
    parse_records(in);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("drugs") != std::string::npos);
    CHECK(msg.find("P123") != std::string::npos);
  }
}

TEST_CASE("timestamps") {
  CHECK(Timestamp::parse("1970-01-02").seconds == 86400);
  CHECK(Timestamp::parse("2000-03-01T12:00:00").days_since(Timestamp::parse("2000-02-28")) ==
        doctest::Approx(2.5));
  CHECK(Timestamp::parse("2010-01-31").to_string() == "2010-01-31");
  CHECK(Timestamp::parse("2010-01-31 05:06:07").to_string() == "2010-01-31T05:06:07");
  CHECK_THROWS_AS(Timestamp::parse("31/01/2010"), DataError);
}

TEST_CASE("assign_label") {
  auto flags = [](std::vector<bool> f) {
    PatientRecord r;
    for (bool b : f) {
      Visit v;
      v.hospital_expire_flag = b;
      r.history.push_back(v);
    }
    return r;
  };
  CHECK(assign_label(flags({false, false, false})) == 0);
  CHECK(assign_label(flags({false, false, true, false, false})) == 1);
  CHECK(assign_label(flags({true})) == 1);
}

TEST_CASE("assign_label ignores code and drug order") {
  PatientRecord r = worked_example();
  r.history[1].hospital_expire_flag = true;
  PatientRecord s = r;
  std::reverse(s.history[0].icd_codes.begin(), s.history[0].icd_codes.end());
  CHECK(assign_label(r) == assign_label(s));
}

TEST_CASE("build_graph: hand-traced example") {
  const auto rec = worked_example();
  const auto vocab = Vocabulary::from_records({rec});
  const auto g = build_graph(rec, vocab);
  const std::multiset<Triple> expected = {
      {"gender:F", "icd:D1", 47}, {"gender:F", "icd:D2", 47}, {"icd:D1", "drug:R0", 30},
      {"icd:D2", "drug:R0", 30},  {"drug:R0", "icd:D3", 30},  {"icd:D3", "drug:R1", 14}};
  CHECK(triples(g) == expected);
  CHECK(g.num_nodes() == 6);
  CHECK(g.label == 0);

  // literal pseudocode mode drops exactly the first-visit diagnosis->drug edges
  const auto literal = build_graph(rec, vocab, BuildOptions{false});
  std::multiset<Triple> diff;
  const auto lit = triples(literal);
  std::set_difference(expected.begin(), expected.end(), lit.begin(), lit.end(),
                      std::inserter(diff, diff.begin()));
  CHECK(diff == std::multiset<Triple>{{"icd:D1", "drug:R0", 30}, {"icd:D2", "drug:R0", 30}});
  CHECK(std::includes(expected.begin(), expected.end(), lit.begin(), lit.end()));
}

TEST_CASE("build_graph: minimal graph") {
  const auto rec = one(json{{"patient_id", "m"},
                            {"history", {visit("h", "2010-01-01", "2010-01-02", {"C"}, {}, 1, false, 60, "M")}}});
  const auto g = build_graph(rec, Vocabulary::from_records({rec}));
  REQUIRE(g.edges.size() == 1);
  CHECK(triples(g) == std::multiset<Triple>{{"gender:M", "icd:C", 60}});
}

TEST_CASE("build_graph: first visit without diagnoses is an error") {
  const auto rec = one(json{{"patient_id", "m"},
                            {"history", {visit("h", "2010-01-01", "2010-01-02", {}, {"X"}, 1)}}});
  CHECK_THROWS_AS(build_graph(rec, Vocabulary::from_records({rec})), DataError);
}

TEST_CASE("build_graph: overlapping admissions clamp to zero and link the earlier visit") {
  // v2 starts before v1 ends; v3 starts after v2 ends
  const auto rec = one(json{{"patient_id", "o"},
                            {"history",
                             {visit("h1", "2010-01-01", "2010-01-20", {"A"}, {"X"}, 19),
                              visit("h2", "2010-01-10", "2010-01-15", {"B"}, {"Y"}, 5),
                              visit("h3", "2010-01-25", "2010-01-26", {"C"}, {"Z"}, 1)}}});
  const auto g = build_graph(rec, Vocabulary::from_records({rec}));
  const auto t = triples(g);
  CHECK(t.count({"drug:X", "icd:B", 0.0}) == 1);  // -10 days clamped
  CHECK(t.count({"drug:Y", "icd:C", 10.0}) == 1);
  CHECK(t.count({"drug:X", "icd:C", 5.0}) == 1);  // overlap rule reaches back one visit
  for (const auto& e : g.edges) {
    CHECK(e.weight >= 0.0);
    CHECK(std::isfinite(e.weight));
    CHECK(e.src != e.dst);
  }
}

TEST_CASE("build_graph: duplicate edges keep the smallest weight") {
  const auto rec = one(json{{"patient_id", "d"},
                            {"history",
                             {visit("h1", "2010-01-01", "2010-01-02", {"A"}, {"X"}, 1),
                              visit("h2", "2010-02-01", "2010-02-02", {"A"}, {"X"}, 1),
                              visit("h3", "2010-02-05", "2010-02-06", {"A"}, {"X"}, 1)}}});
  const auto g = build_graph(rec, Vocabulary::from_records({rec}));
  const auto t = triples(g);
  CHECK(t.count({"drug:X", "icd:A", 3.0}) == 1);
  CHECK(t.count({"drug:X", "icd:A", 30.0}) == 0);
}

TEST_CASE("build_graph: one-hot rows and OOV") {
  const auto rec = worked_example();
  const Vocabulary vocab(std::vector<std::string>{"gender:F", "icd:D1", "icd:D2"});
  const auto g = build_graph(rec, vocab);
  const Matrix x = g.node_features();
  CHECK(x.rows() == g.num_nodes());
  CHECK(x.cols() == vocab.size());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    CHECK(x.row(i).sum() == 1.0);
    CHECK(x.row(i).maxCoeff() == 1.0);
  }
  CHECK(vocab.column("drug:R0") == 0);
  CHECK(vocab.column("gender:F") == 1);
}

TEST_CASE("build_graph is prefix-monotone") {
  const auto recs = synthesize_cohort(3, 30);
  for (const auto& r : recs) {
    if (r.history.size() < 2) continue;
    PatientRecord shorter = r;
    shorter.history.pop_back();
    const auto vocab = Vocabulary::from_records({r});
    const auto full = triples(build_graph(r, vocab));
    const auto part = triples(build_graph(shorter, vocab));
    // every edge of the prefix survives, with a weight no larger after duplicate merging
    for (const auto& [s, d, w] : part) {
      bool found = false;
      for (const auto& [s2, d2, w2] : full) found = found || (s2 == s && d2 == d && w2 <= w);
      CHECK(found);
    }
  }
}

TEST_CASE("vocabulary: sorted, persisted, OOV column zero") {
  const auto recs = synthesize_cohort(1, 20);
  const auto v = Vocabulary::from_records(recs);
  CHECK(std::is_sorted(v.tokens().begin(), v.tokens().end()));
  std::stringstream ss;
  v.save(ss);
  CHECK(Vocabulary::load(ss) == v);
  CHECK(v.column("never-seen") == 0);
  for (std::size_t i = 0; i < v.tokens().size(); ++i) CHECK(v.column(v.tokens()[i]) == static_cast<int>(i) + 1);
}

TEST_CASE("graph serialization round trip") {
  const auto recs = synthesize_cohort(2, 25);
  const auto vocab = Vocabulary::from_records(recs);
  std::vector<PatientGraph> graphs;
  for (const auto& r : recs) graphs.push_back(build_graph(r, vocab));
  std::stringstream ss;
  write_graphs(ss, graphs);
  const auto back = read_graphs(ss, vocab);
  REQUIRE(back.size() == graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) CHECK(back[i] == graphs[i]);
}

TEST_CASE("read_graphs rejects bad endpoints and weights") {
  const Vocabulary vocab(std::vector<std::string>{"a", "b"});
  std::istringstream bad_end(R"({"graph_id":"g","tokens":["a","b"],"edges":[[0,5,1.0]],"label":0,"disease_tag":null})");
  CHECK_THROWS_AS(read_graphs(bad_end, vocab), DataError);
  std::istringstream bad_w(R"({"graph_id":"g","tokens":["a","b"],"edges":[[0,1,-1.0]],"label":0,"disease_tag":null})");
  CHECK_THROWS_AS(read_graphs(bad_w, vocab), DataError);
}

TEST_CASE("graph_stats") {
  PatientGraph a;
  a.node_tokens = {"x", "y", "z"};
  a.edges = {{0, 1, 1}, {1, 2, 1}};
  auto s = graph_stats({a});
  CHECK(s.count == 1);
  CHECK(s.max_nodes == 3);
  CHECK(s.avg_nodes == 3.0);
  CHECK(s.max_edges == 2);
  CHECK(s.avg_edges == 2.0);

  PatientGraph b, c;
  b.node_tokens = {"x", "y"};
  b.edges = {{0, 1, 1}};
  c.node_tokens = {"p", "q", "r", "s"};
  c.edges = {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}};
  s = graph_stats({b, c});
  CHECK(s.avg_nodes == 3.0);
  CHECK(s.avg_edges == 2.0);
  CHECK_THROWS_AS(graph_stats({}), DataError);
}

TEST_CASE("synthesize_cohort: deterministic and schema-valid") {
  std::stringstream a, b;
  write_records(a, synthesize_cohort(1, 10));
  write_records(b, synthesize_cohort(1, 10));
  CHECK(a.str() == b.str());

  std::stringstream single;
  write_records(single, synthesize_cohort(1, 1));
  const auto parsed = parse_records(single);
  REQUIRE(parsed.size() == 1);
  validate_record(parsed[0]);
  std::stringstream again;
  write_records(again, parsed);
  std::stringstream original;
  write_records(original, synthesize_cohort(1, 1));
  CHECK(again.str() == original.str());
}

TEST_CASE("synthesize_cohort: shape of the generated data") {
  const auto recs = synthesize_cohort(1, 2000);
  int positive = 0;
  int motif_pos = 0, motif_n = 0;
  for (const auto& r : recs) {
    const int y = assign_label(r);
    positive += y;
    if (has_risk_motif(r)) {
      ++motif_n;
      motif_pos += y;
    }
    CHECK(r.history.size() >= 1);
    CHECK(r.history.size() <= 8);
    CHECK(r.disease_tag.has_value());
    for (const auto& v : r.history) {
      CHECK(v.icd_codes.size() >= 1);
      CHECK(v.icd_codes.size() <= 5);
      CHECK(v.drugs.size() <= 3);
    }
  }
  const double rate = positive / 2000.0;
  CHECK(rate >= 0.06);
  CHECK(rate <= 0.16);
  // the motif raises mortality well above the base rate
  REQUIRE(motif_n > 0);
  CHECK(static_cast<double>(motif_pos) / motif_n > 0.4);
  CHECK_THROWS_AS(synthesize_cohort(1, 0), DataError);
}
