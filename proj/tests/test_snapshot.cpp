#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <atomgraph/apps/bp.hpp>
#include <atomgraph/apps/pagerank.hpp>
#include <atomgraph/chromatic.hpp>
#include <atomgraph/gen.hpp>
#include <atomgraph/locking.hpp>
#include <atomgraph/snapshot.hpp>
#include <atomgraph/verify.hpp>

using namespace atomgraph;
namespace fs = std::filesystem;

namespace {

std::vector<scheduled_task> all_vertices(std::size_t n, double priority = 0.0) {
  std::vector<scheduled_task> tasks;
  for (vertex_id v = 0; v < n; ++v) tasks.push_back({v, priority});
  return tasks;
}

data_graph gather_to(const data_graph& original, std::vector<local_partition>& parts) {
  data_graph g = original;
  gather_partitions(parts, g);
  return g;
}

}  // namespace

TEST_CASE("optimal_interval implements Young's formula") {
  // 2 min checkpoints, cluster MTBF of a year over 64 machines
  double t = optimal_interval(2.0, 525600.0 / 64.0);
  CHECK(t >= 180.0);
  CHECK(t <= 183.0);
  CHECK(optimal_interval(8, 16) == doctest::Approx(16.0));
  CHECK(optimal_interval(1e-9, 10) < 1e-3);  // interval -> 0 with checkpoint cost
  CHECK_THROWS_AS(optimal_interval(0, 5), non_positive_input_error);
  CHECK_THROWS_AS(optimal_interval(5, -1), non_positive_input_error);
}

TEST_CASE("optimal_interval is strictly increasing in both arguments") {
  rng r(3);
  for (int i = 0; i < 50; ++i) {
    double a = r.uniform(0.1, 100), b = r.uniform(0.1, 100), d = r.uniform(0.01, 10);
    CHECK(optimal_interval(a + d, b) > optimal_interval(a, b));
    CHECK(optimal_interval(a, b + d) > optimal_interval(a, b));
  }
}

TEST_CASE("snapshot journal files round-trip and detect truncation") {
  auto dir = fs::temp_directory_path() / "atomgraph_snap_test";
  fs::create_directories(dir);
  snapshot_journal j;
  j.epoch = 3;
  j.machine = 1;
  j.complete = true;
  j.records.push_back(snapshot_journal::record::vertex(7, {1, 2, 3}));
  j.records.push_back(snapshot_journal::record::edge_pair(7, 9, payload{4}, payload{5}));
  j.records.push_back(snapshot_journal::record::edge_pair(7, 11, std::nullopt, payload{6}));
  std::string path = (dir / "j.snap").string();
  write_snapshot_journal(j, path);
  snapshot_journal back = read_snapshot_journal(path);
  CHECK(back.epoch == 3);
  CHECK(back.machine == 1);
  CHECK(back.complete);
  REQUIRE(back.records.size() == 3);
  CHECK(back.records == j.records);

  // every 1-byte truncation detected
  std::ifstream in(path, std::ios::binary);
  payload data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  for (std::size_t cut = 14; cut < data.size(); ++cut) {
    std::ofstream out((dir / "t.snap").string(), std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(cut));
    out.close();
    CHECK_THROWS_AS(read_snapshot_journal((dir / "t.snap").string()),
                    corrupt_atom_file_error);
  }
  fs::remove_all(dir);
}

TEST_CASE("idle chromatic engine: epoch 0 is a full dump equal to the graph") {
  data_graph g = apps::make_pagerank_graph(12, gen::random_directed(12, 2.0, 6));
  auto parts = partition_in_memory(g, 4, 2, partition_method::hash);
  engine_options opts;
  opts.snapshot_at = {0};  // snapshot before any step
  chromatic_engine eng(parts, greedy_color(g), apps::make_pagerank_update({0.15, 1e-6, 12}),
                       opts);
  engine_result res = eng.run();  // empty task set: snapshot then stop

  std::map<vertex_id, payload> verts;
  std::map<std::pair<vertex_id, vertex_id>, payload> edges;
  for (const auto& j : res.snapshots.epoch(0)) {
    CHECK(j->complete);
    for (const auto& rec : j->records) {
      if (rec.kind == 0) CHECK(verts.emplace(rec.a, rec.fwd).second);
      else CHECK(edges.emplace(std::pair(rec.a, rec.b), rec.fwd).second);
    }
  }
  CHECK(verts.size() == g.num_vertices());
  CHECK(edges.size() == g.num_edges());
  for (const auto& [v, bytes] : verts) CHECK(bytes == g.vertex_data(v));
}

TEST_CASE("chromatic mid-run snapshot does not perturb the computation") {
  auto edges = gen::random_directed(40, 2.5, 13);
  data_graph g = apps::make_pagerank_graph(40, edges);
  apps::pagerank_config cfg{0.15, 1e-10, 40};

  auto run_with = [&](std::vector<std::uint64_t> snaps) {
    auto parts = partition_in_memory(g, 8, 4, partition_method::hash);
    engine_options opts;
    opts.latency = {1, 1, 4};
    opts.snapshot_at = std::move(snaps);
    chromatic_engine eng(parts, greedy_color(g), apps::make_pagerank_update(cfg), opts);
    eng.seed(all_vertices(40));
    engine_result res = eng.run();
    return std::pair(gather_to(g, parts).data_digest(), res.snapshots.all().size());
  };
  auto plain = run_with({});
  auto snapped = run_with({5});
  CHECK(plain.first == snapped.first);  // bit-exact
  CHECK(snapped.second == 4);           // one epoch, four machine journals
}

TEST_CASE("locking sync snapshot: suspend quiesces, epochs are incremental, run resumes") {
  auto edges = gen::random_directed(60, 3.0, 23);
  data_graph g = apps::make_pagerank_graph(60, edges);
  apps::pagerank_config cfg{0.15, 1e-11, 60};

  // baseline makespan to place snapshots mid-run
  logical_time baseline;
  {
    auto parts = partition_in_memory(g, 8, 4, partition_method::hash);
    engine_options opts;
    opts.latency = {1, 0, 0};
    engine_result res =
        run_locking(parts, apps::make_pagerank_update(cfg), all_vertices(60), opts);
    baseline = res.makespan;
  }
  REQUIRE(baseline > 20);

  auto parts = partition_in_memory(g, 8, 4, partition_method::hash);
  engine_options opts;
  opts.latency = {1, 0, 0};
  opts.snapshot_at = {baseline / 4, baseline / 2};
  locking_engine eng(parts, apps::make_pagerank_update(cfg), opts);
  eng.seed(all_vertices(60));
  engine_result res = eng.run();

  // both epochs complete on all machines
  for (std::uint32_t e : {0u, 1u}) {
    auto js = res.snapshots.epoch(e);
    CHECK(js.size() == 4);
    for (const auto* j : js) CHECK(j->complete);
  }
  // epoch 1 saves strictly less than a full dump (incremental)
  std::size_t e0 = 0, e1 = 0;
  for (const auto* j : res.snapshots.epoch(0)) e0 += j->records.size();
  for (const auto* j : res.snapshots.epoch(1)) e1 += j->records.size();
  CHECK(e0 == g.num_vertices() + g.num_edges());
  CHECK(e1 < e0);

  // no update executions inside any suspend window
  std::vector<std::pair<logical_time, logical_time>> windows;
  logical_time begin = 0;
  for (const auto& r : res.trace.records) {
    if (r.kind != trace_kind::barrier) continue;
    if (r.note.find("snapshot-epoch") == std::string::npos) continue;
    if (r.note.find("-begin") != std::string::npos) begin = r.start;
    if (r.note.find("-end") != std::string::npos) windows.emplace_back(begin, r.start);
  }
  REQUIRE(windows.size() == 2);
  for (const auto& r : res.trace.records) {
    if (r.kind != trace_kind::update) continue;
    for (const auto& [s, e] : windows) {
      bool inside = r.start >= s && r.end <= e && r.start != s;
      CHECK_FALSE(inside);
    }
  }

  // the run still converges to the oracle
  auto oracle = apps::pagerank_power_iteration(g, cfg, 1e-13);
  CHECK(apps::l1_distance(apps::extract_ranks(gather_to(g, parts)), oracle) < 1e-7);
}

TEST_CASE("async snapshot on a star saves the center once with its edges") {
  data_graph g = apps::make_pagerank_graph(4, {{0, 1}, {0, 2}, {0, 3}});
  auto parts = partition_in_memory(g, 1, 1, partition_method::hash);
  engine_options opts;
  opts.snapshot_async = true;
  opts.snapshot_at = {0};
  locking_engine eng(parts, apps::make_pagerank_update({0.15, 1e-6, 4}), opts);
  engine_result res = eng.run();  // no app tasks: pure snapshot flood

  REQUIRE(res.snapshots.all().size() == 1);
  const auto& j = res.snapshots.all()[0];
  CHECK(j.complete);
  std::size_t vrecs = 0, erecs = 0;
  for (const auto& rec : j.records) (rec.kind == 0 ? vrecs : erecs)++;
  CHECK(vrecs == 4);
  CHECK(erecs == 3);
  // vertex 0 executes first (ascending seed order): saves all three edges
  CHECK(j.records[0].kind == 0);
  CHECK(j.records[0].a == 0);
}

TEST_CASE("async snapshot covers every vertex and edge pair exactly once") {
  auto edges = gen::random_directed(100, 3.0, 71);
  data_graph g = apps::make_pagerank_graph(100, edges);
  std::set<std::pair<vertex_id, vertex_id>> undirected;
  for (edge_index e = 0; e < g.num_edges(); ++e) {
    auto [s, t] = g.edge(e);
    undirected.insert({std::min(s, t), std::max(s, t)});
  }

  auto parts = partition_in_memory(g, 8, 4, partition_method::hash);
  engine_options opts;
  opts.snapshot_async = true;
  opts.snapshot_at = {0};
  opts.latency = {1, 1, 9};
  locking_engine eng(parts, apps::make_pagerank_update({0.15, 1e-6, 100}), opts);
  engine_result res = eng.run();

  std::set<vertex_id> verts;
  std::set<std::pair<vertex_id, vertex_id>> pairs;
  for (const auto& j : res.snapshots.epoch(0)) {
    CHECK(j->complete);
    for (const auto& rec : j->records) {
      if (rec.kind == 0) {
        CHECK(verts.insert(rec.a).second);  // exactly once
      } else {
        auto key = std::pair(std::min(rec.a, rec.b), std::max(rec.a, rec.b));
        CHECK(pairs.insert(key).second);
      }
    }
  }
  CHECK(verts.size() == 100);
  CHECK(pairs == undirected);
}

TEST_CASE("async snapshot of an idle engine matches the sync snapshot content") {
  auto edges = gen::random_directed(30, 2.0, 41);
  data_graph g = apps::make_pagerank_graph(30, edges);

  auto run_mode = [&](bool async) {
    auto parts = partition_in_memory(g, 4, 2, partition_method::hash);
    engine_options opts;
    opts.snapshot_async = async;
    opts.snapshot_at = {0};
    locking_engine eng(parts, apps::make_pagerank_update({0.15, 1e-6, 30}), opts);
    engine_result res = eng.run();
    std::map<vertex_id, payload> verts;
    std::map<std::pair<vertex_id, vertex_id>, payload> edge_bytes;
    for (const auto& j : res.snapshots.epoch(0)) {
      for (const auto& rec : j->records) {
        if (rec.kind == 0) verts[rec.a] = rec.fwd;
        else {
          if (rec.has_fwd) edge_bytes[{rec.a, rec.b}] = rec.fwd;
          if (rec.has_rev) edge_bytes[{rec.b, rec.a}] = rec.rev;
        }
      }
    }
    return std::pair(verts, edge_bytes);
  };
  auto s = run_mode(false);
  auto a = run_mode(true);
  CHECK(s.first == a.first);
  CHECK(s.second == a.second);
}

TEST_CASE("async snapshot mid-run forms a consistent cut") {
  auto edges = gen::grid2d(10, 10);
  data_graph g = apps::make_mrf(100, edges, 31, 1.0);

  logical_time baseline;
  {
    auto parts = partition_in_memory(g, 8, 4, partition_method::bfs_blocks);
    engine_options opts;
    opts.latency = {1, 0, 0};
    opts.pipeline_length = 8;
    engine_result res =
        run_locking(parts, apps::make_bp_update({1e-6}), all_vertices(100, 1.0), opts);
    baseline = res.makespan;
  }

  auto parts = partition_in_memory(g, 8, 4, partition_method::bfs_blocks);
  engine_options opts;
  opts.latency = {1, 0, 0};
  opts.pipeline_length = 8;
  opts.snapshot_async = true;
  opts.snapshot_at = {baseline / 3};
  locking_engine eng(parts, apps::make_bp_update({1e-6}), opts);
  eng.seed(all_vertices(100, 1.0));
  engine_result res = eng.run();

  REQUIRE(res.snapshots.epoch(0).size() == 4);
  for (const auto* j : res.snapshots.epoch(0)) CHECK(j->complete);

  // regular updates stayed serializable through the concurrent snapshot
  data_graph final_state = gather_to(g, parts);
  auto verdict = verify_serializability(res.trace, g, final_state,
                                        apps::make_bp_update({1e-6}),
                                        consistency_model::edge);
  INFO(verdict.violation);
  CHECK(verdict.serializable);

  // consistent cut: for every update that wrote several elements, the
  // snapshot never captured one element before the update and another
  // after it
  std::map<element_key, logical_time> save_time;
  auto canon = [](const element_key& k) {
    if (k.kind == 1 && k.a > k.b) return element_key{1, k.b, k.a};
    return k;
  };
  for (const auto& r : res.trace.records) {
    if (r.kind != trace_kind::snapshot_save) continue;
    for (const auto& k : r.writes)
      if (k.kind <= 1) save_time[canon(k)] = r.start;
  }
  std::size_t checked = 0;
  for (const auto& r : res.trace.records) {
    if (r.kind != trace_kind::update) continue;
    bool saw_pre = false, saw_post = false;
    for (const auto& k : r.writes) {
      auto it = save_time.find(canon(k));
      if (it == save_time.end()) continue;
      if (it->second < r.start) saw_pre = true;
      if (it->second > r.end) saw_post = true;
    }
    CHECK_FALSE((saw_pre && saw_post));
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("recovery: epoch 0 full dump restores the initial load") {
  data_graph g = apps::make_pagerank_graph(20, gen::random_directed(20, 2.0, 19));
  auto result = over_partition(g, 4, partition_method::hash);
  auto assign = place_atoms(result.index, 2);

  std::vector<local_partition> parts;
  for (machine_id p = 0; p < 2; ++p) {
    std::vector<atom_journal> mine;
    for (atom_id a = 0; a < 4; ++a)
      if (assign.of(a) == p) mine.push_back(result.journals[a]);
    parts.push_back(build_local_partition(result.index, assign, p, mine));
  }
  engine_options opts;
  opts.snapshot_at = {0};
  chromatic_engine eng(parts, greedy_color(g), apps::make_pagerank_update({0.15, 1e-6, 20}),
                       opts);
  engine_result res = eng.run();

  recovery_result rec = recover(result.index, assign, result.journals, res.snapshots, 0);
  CHECK(rec.used_epoch == 0);
  CHECK_FALSE(rec.fell_back);
  data_graph recovered = gather_to(g, rec.partitions);
  CHECK(recovered.data_digest() == g.data_digest());
}

TEST_CASE("kill after epoch 1, recover, rerun: converges with the uninterrupted run") {
  auto edges = gen::random_directed(50, 2.5, 67);
  data_graph g = apps::make_pagerank_graph(50, edges);
  apps::pagerank_config cfg{0.15, 1e-13, 50};
  auto result = over_partition(g, 8, partition_method::hash);
  auto assign = place_atoms(result.index, 4);
  auto load_all = [&]() {
    std::vector<local_partition> parts;
    for (machine_id p = 0; p < 4; ++p) {
      std::vector<atom_journal> mine;
      for (atom_id a = 0; a < 8; ++a)
        if (assign.of(a) == p) mine.push_back(result.journals[a]);
      parts.push_back(build_local_partition(result.index, assign, p, mine));
    }
    return parts;
  };

  // uninterrupted reference
  auto ref_parts = load_all();
  engine_options ref_opts;
  ref_opts.latency = {1, 0, 0};
  run_locking(ref_parts, apps::make_pagerank_update(cfg), all_vertices(50), ref_opts);
  auto ref_ranks = apps::extract_ranks(gather_to(g, ref_parts));

  // measure, then kill right after epoch 1 completes
  logical_time baseline;
  {
    auto parts = load_all();
    engine_options opts;
    opts.latency = {1, 0, 0};
    baseline =
        run_locking(parts, apps::make_pagerank_update(cfg), all_vertices(50), opts).makespan;
  }
  auto parts = load_all();
  engine_options opts;
  opts.latency = {1, 0, 0};
  opts.snapshot_at = {baseline / 4, baseline / 2};
  opts.halt_after_epoch = 1;
  locking_engine eng(parts, apps::make_pagerank_update(cfg), opts);
  eng.seed(all_vertices(50));
  engine_result res = eng.run();
  CHECK(res.halted_at_checkpoint);

  // recover from the last checkpoint and run to convergence
  recovery_result rec = recover(result.index, assign, result.journals, res.snapshots, 1);
  CHECK(rec.used_epoch == 1);
  engine_options resume_opts;
  resume_opts.latency = {1, 0, 0};
  run_locking(rec.partitions, apps::make_pagerank_update(cfg), all_vertices(50),
              resume_opts);
  auto recovered_ranks = apps::extract_ranks(gather_to(g, rec.partitions));

  CHECK(apps::l1_distance(recovered_ranks, ref_ranks) < 1e-10);
}

TEST_CASE("a journal without its completeness marker falls back an epoch") {
  data_graph g = apps::make_pagerank_graph(16, gen::random_directed(16, 2.0, 3));
  auto result = over_partition(g, 4, partition_method::hash);
  auto assign = place_atoms(result.index, 2);

  snapshot_store store;
  for (std::uint32_t epoch = 0; epoch < 2; ++epoch) {
    for (machine_id p = 0; p < 2; ++p) {
      snapshot_journal j;
      j.epoch = epoch;
      j.machine = std::uint16_t(p);
      j.complete = !(epoch == 1 && p == 1);  // machine 1 lost its marker
      store.add(std::move(j));
    }
  }
  recovery_result rec = recover(result.index, assign, result.journals, store, 1);
  CHECK(rec.used_epoch == 0);
  CHECK(rec.fell_back);

  // no complete epoch at all: the error surfaces
  snapshot_store empty_store;
  snapshot_journal j;
  j.epoch = 0;
  j.machine = 0;
  j.complete = false;
  empty_store.add(std::move(j));
  CHECK_THROWS_AS(recover(result.index, assign, result.journals, empty_store, 0),
                  incomplete_checkpoint_error);
}
