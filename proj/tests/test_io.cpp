// SPDX-License-Identifier: Apache-2.0
#include <sasa/io.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <random>

using namespace sasa;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
  auto dir = fs::temp_directory_path() / ("sasa_io_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path &p, const std::string &s) { std::ofstream(p) << s; }

} // namespace

TEST(Io, SampleLineFormat) {
  TimeSeriesSample s{"a", 2, 2, {1.0, 2.5, -3.0, 0.125}, 1.0, Domain::target};
  EXPECT_EQ(io::to_json(s).dump(),
            R"({"id":"a","series":[[1.0,2.5],[-3.0,0.125]],"label":1.0,"domain":"target"})");
  s.label.reset();
  EXPECT_EQ(io::to_json(s)["label"], nullptr);
}

TEST(Io, NdjsonRoundTripIsExact) {
  auto dir = scratch("roundtrip");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<TimeSeriesSample> data;
  for (int k = 0; k < 5; ++k) {
    TimeSeriesSample s{"s" + std::to_string(k), 3, 4, {}, std::nullopt, Domain::source};
    for (int q = 0; q < 12; ++q) s.series.push_back(g(rng) / 3.0);
    if (k % 2) s.label = 0.0;
    data.push_back(s);
  }
  io::write_ndjson(dir / "d.ndjson", data);
  auto back = io::read_ndjson(dir / "d.ndjson");
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    EXPECT_EQ(back[k].id, data[k].id);
    EXPECT_EQ(back[k].series, data[k].series);
    EXPECT_EQ(back[k].label, data[k].label);
    EXPECT_EQ(back[k].variables, 3u);
  }
  io::write_ndjson(dir / "e.ndjson", back);
  EXPECT_EQ(slurp(dir / "d.ndjson"), slurp(dir / "e.ndjson"));
}

TEST(Io, MalformedDatasetsAreRejected) {
  auto dir = scratch("malformed");
  const std::string ok = R"({"id":"a","series":[[1,2],[3,4]],"label":null,"domain":"source"})";
  spit(dir / "ragged.ndjson", R"({"id":"a","series":[[1,2],[3]],"label":null,"domain":"source"})");
  spit(dir / "shape.ndjson", ok + "\n" +
                                 R"({"id":"b","series":[[1,2,3]],"label":null,"domain":"source"})");
  spit(dir / "domain.ndjson", R"({"id":"a","series":[[1]],"label":null,"domain":"other"})");
  spit(dir / "extra.ndjson", R"({"id":"a","series":[[1]],"label":null,"domain":"source","x":1})");
  spit(dir / "syntax.ndjson", "{not json\n");
  spit(dir / "label.ndjson", R"({"id":"a","series":[[1]],"label":"yes","domain":"source"})");
  for (auto name : {"ragged", "shape", "domain", "extra", "syntax", "label"}) {
    EXPECT_THROW(io::read_ndjson(dir / (std::string(name) + ".ndjson")), InvalidInput) << name;
  }
  EXPECT_THROW(io::read_ndjson(dir / "missing.ndjson"), InvalidInput);
}

TEST(Io, SpecsRoundTrip) {
  auto g = synth::default_benchmark_graph();
  auto g2 = io::graph_from_json(io::to_json(g));
  EXPECT_EQ(io::to_json(g2).dump(), io::to_json(g).dump());
  auto d = synth::default_target_domain();
  auto d2 = io::domain_from_json(io::to_json(d));
  EXPECT_EQ(d2.lag_shift, 2);
  EXPECT_EQ(d2.offset_max, 5);
  auto bad = io::to_json(g);
  bad["colour"] = 1;
  EXPECT_THROW(io::graph_from_json(bad), InvalidInput);
}

TEST(Io, RunConfigIsStrict) {
  auto dir = scratch("config");
  for (auto f : {"s.ndjson", "t.ndjson", "u.ndjson"}) spit(dir / f, "");
  io::json j = {{"M", 6},          {"N", 24},
                {"omega", 3.0},    {"ablation", "no_beta"},
                {"source_train", "s.ndjson"}, {"target_train", "t.ndjson"},
                {"target_test", "u.ndjson"},  {"out_dir", "out"}};
  auto r = io::run_config_from_json(j, dir);
  EXPECT_EQ(r.model.variables, 6u);
  EXPECT_EQ(r.model.hidden, 16u);
  EXPECT_EQ(r.model.omega, 3.0);
  EXPECT_EQ(r.model.ablation, model::Ablation::no_beta);
  EXPECT_EQ(r.source_train, dir / "s.ndjson");

  auto typo = j;
  typo["omgea"] = 1.0;
  EXPECT_THROW(io::run_config_from_json(typo, dir), InvalidInput);
  auto missing = j;
  missing["target_test"] = "nope.ndjson";
  EXPECT_THROW(io::run_config_from_json(missing, dir), InvalidInput);
  auto wrong_type = j;
  wrong_type["epochs"] = "ten";
  EXPECT_THROW(io::run_config_from_json(wrong_type, dir), InvalidInput);
  auto bad_enum = j;
  bad_enum["ablation"] = "half";
  EXPECT_THROW(io::run_config_from_json(bad_enum, dir), InvalidInput);
}

TEST(Io, SnapshotRoundTrip) {
  model::ModelConfig c;
  c.variables = 3;
  c.length = 5;
  c.hidden = 2;
  c.seed = 9;
  c.omega = 0.1 + 0.2;
  auto p = model::ModelParams::init(c);
  auto j = io::snapshot_to_json(p, c);
  auto s = io::snapshot_from_json(io::json::parse(j.dump()));
  EXPECT_EQ(s.config.omega, c.omega);
  auto a = p.tensors(), b = s.params.tensors();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_TRUE(std::equal(a[k].values().begin(), a[k].values().end(), b[k].values().begin()));
  }
  auto broken = j;
  broken["params"].erase("predictor.w2");
  EXPECT_THROW(io::snapshot_from_json(broken), InvalidInput);
}

TEST(Io, ReportCsvColumns) {
  model::TrainReport r;
  r.metric = "auc";
  r.epochs.push_back({1, 0.5, 0.25, 0.125, 0.875, 0.75, 3.0});
  r.epochs.push_back({2, 0.4, 0.0, 0.0, 0.4, std::nullopt, 1.0});
  EXPECT_EQ(io::report_csv(r),
            "epoch,L_y,L_alpha,L_beta,total,target_metric\n"
            "1,0.5,0.25,0.125,0.875,0.75\n"
            "2,0.4,0,0,0.4,\n");
}

TEST(Io, StructureCsvRoundTrip) {
  structure::StructureMatrix m{3, {0, 0.25, 0.75, 1, 0, 0, 0.5, 0.5, 0}};
  const auto csv = io::structure_csv(m);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "variable,0,1,2");
  auto back = io::parse_structure_csv(csv);
  EXPECT_EQ(back.a, m.a);
}
