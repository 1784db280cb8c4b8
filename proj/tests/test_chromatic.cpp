#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomgraph/apps/als.hpp>
#include <atomgraph/apps/pagerank.hpp>
#include <atomgraph/chromatic.hpp>
#include <atomgraph/coloring.hpp>
#include <atomgraph/gen.hpp>
#include <atomgraph/serial.hpp>
#include <atomgraph/sync.hpp>
#include <atomgraph/verify.hpp>

using namespace atomgraph;

namespace {

std::vector<scheduled_task> all_vertices(std::size_t n) {
  std::vector<scheduled_task> tasks;
  for (vertex_id v = 0; v < n; ++v) tasks.push_back({v, 0.0});
  return tasks;
}

data_graph gather_to(const data_graph& original, std::vector<local_partition>& parts) {
  data_graph g = original;
  gather_partitions(parts, g);
  return g;
}

}  // namespace

// ---- coloring ---------------------------------------------------------------

TEST_CASE("greedy coloring basics") {
  SUBCASE("path needs 2 colors") {
    data_graph g = build_graph(3, {{0, 1}, {1, 2}});
    coloring c = greedy_color(g);
    CHECK(c.count == 2);
    CHECK(coloring_valid_for(g, c, consistency_model::edge));
  }
  SUBCASE("triangle needs 3 colors") {
    data_graph g = build_graph(3, {{0, 1}, {1, 2}, {0, 2}});
    coloring c = greedy_color(g);
    CHECK(c.count == 3);
  }
  SUBCASE("random graph coloring is valid by adjacency scan") {
    auto edges = gen::random_directed(200, 5.0, 1);
    data_graph g = build_graph(200, edges);
    coloring c = greedy_color(g);
    for (edge_index e = 0; e < g.num_edges(); ++e)
      CHECK(c.color[g.edge(e).source] != c.color[g.edge(e).target]);
  }
  SUBCASE("deterministic") {
    auto edges = gen::random_directed(100, 4.0, 2);
    data_graph g = build_graph(100, edges);
    coloring a = greedy_color(g), b = greedy_color(g);
    CHECK(a.color == b.color);
  }
}

TEST_CASE("bipartite coloring") {
  SUBCASE("user-movie graph gets exactly 2 colors") {
    auto edges = gen::bipartite(10, 8, 3, 3);
    data_graph g = build_graph(18, edges);
    std::vector<std::uint8_t> side(18, 0);
    for (vertex_id v = 10; v < 18; ++v) side[v] = 1;
    coloring c = bipartite_color(g, side);
    CHECK(c.count == 2);
    CHECK(coloring_valid_for(g, c, consistency_model::edge));
  }
  SUBCASE("single vertex uses one color") {
    data_graph g = build_graph(1, {});
    coloring c = bipartite_color(g, {0});
    CHECK(c.count == 1);
  }
  SUBCASE("odd cycle rejected for any side map") {
    data_graph g = build_graph(3, {{0, 1}, {1, 2}, {2, 0}});
    for (std::uint8_t bits = 0; bits < 8; ++bits) {
      std::vector<std::uint8_t> side = {std::uint8_t(bits & 1), std::uint8_t((bits >> 1) & 1),
                                        std::uint8_t((bits >> 2) & 1)};
      CHECK_THROWS_AS(bipartite_color(g, side), not_bipartite_error);
    }
  }
}

TEST_CASE("second-order coloring") {
  SUBCASE("star K1,3 needs 4 colors") {
    data_graph g = build_graph(4, {{0, 1}, {0, 2}, {0, 3}});
    coloring c = second_order_color(g);
    CHECK(c.count == 4);
    CHECK(coloring_valid_for(g, c, consistency_model::full));
  }
  SUBCASE("single edge needs 2") {
    data_graph g = build_graph(2, {{0, 1}});
    coloring c = second_order_color(g);
    CHECK(c.count == 2);
  }
  SUBCASE("4x4 grid valid by brute-force distance check") {
    data_graph g = build_graph(16, gen::grid2d(4, 4));
    coloring c = second_order_color(g);
    CHECK(coloring_valid_for(g, c, consistency_model::full));
    // also confirm validity with an independent pair scan
    for (vertex_id v = 0; v < 16; ++v) {
      for (vertex_id u : g.neighbors(v)) {
        CHECK(c.color[u] != c.color[v]);
        for (vertex_id w : g.neighbors(u))
          if (w != v) CHECK(c.color[w] != c.color[v]);
      }
    }
  }
}

// ---- sync -------------------------------------------------------------------

TEST_CASE("sync registration checks the combine algebra") {
  sync_registry reg;
  // addition: accepted
  reg.register_sync("sum", sync_sum_f64([](scope& s) {
    return apps::pagerank_vertex::decode(s.vertex_data()).rank;
  }));
  CHECK(reg.has("sum"));
  // duplicate name
  CHECK_THROWS_AS(reg.register_sync("sum", sync_count()), duplicate_name_error);
  // subtraction: not commutative
  sync_task sub = sync_sum_f64([](scope&) { return 0.0; });
  sub.combine = [](const payload& a, const payload& b) {
    return payload_writer().f64(sync_value_f64(a) - sync_value_f64(b)).take();
  };
  CHECK_THROWS_AS(reg.register_sync("sub", sub), non_commutative_combine_error);
  // max with identity finalize: accepted
  reg.register_sync("max", sync_max_f64([](scope&) { return 1.0; }));
  CHECK(reg.has("max"));
}

TEST_CASE("run_sync_pass counts and averages") {
  auto edges = gen::random_directed(40, 2.0, 17);
  data_graph g = apps::make_pagerank_graph(40, edges);

  sync_task count = sync_count();
  CHECK(sync_value_u64(run_sync_pass(g, count, consistency_model::edge)) == 40);

  // partition independence: same Z for any (k, m), exactly for integers
  for (auto [k, m] : std::vector<std::pair<std::uint32_t, machine_id>>{{4, 2}, {10, 3}, {40, 4}}) {
    auto parts = partition_in_memory(g, k, m, partition_method::hash);
    CHECK(sync_value_u64(run_sync_pass(parts, count, consistency_model::edge)) == 40);
  }

  // float sum agrees within 1e-12 relative
  sync_task sum = sync_sum_f64(
      [](scope& s) { return apps::pagerank_vertex::decode(s.vertex_data()).rank; });
  double whole = sync_value_f64(run_sync_pass(g, sum, consistency_model::edge));
  auto parts = partition_in_memory(g, 8, 4, partition_method::bfs_blocks);
  double split = sync_value_f64(run_sync_pass(parts, sum, consistency_model::edge));
  CHECK(split == doctest::Approx(whole).epsilon(1e-12));

  // mean rank via finalize
  sync_task mean = sync_sum_f64(
      [](scope& s) { return apps::pagerank_vertex::decode(s.vertex_data()).rank; });
  mean.finalize = [](const payload& p) {
    return payload_writer().f64(sync_value_f64(p) / 40.0).take();
  };
  CHECK(sync_value_f64(run_sync_pass(g, mean, consistency_model::edge)) ==
        doctest::Approx(whole / 40.0));
}

TEST_CASE("combine order irrelevance for integer accumulators") {
  sync_task count = sync_count();
  std::vector<payload> partials;
  rng r(5);
  for (int i = 0; i < 6; ++i) partials.push_back(payload_writer().u64(r.below(100)).take());
  std::vector<std::size_t> perm = {0, 1, 2, 3, 4, 5};
  std::uint64_t expect = 0;
  for (const auto& p : partials) expect += sync_value_u64(p);
  for (int shuffle = 0; shuffle < 10; ++shuffle) {
    std::next_permutation(perm.begin(), perm.end());
    payload acc = count.identity;
    for (std::size_t i : perm) acc = count.combine(acc, partials[i]);
    CHECK(sync_value_u64(acc) == expect);
  }
}

// ---- chromatic engine ---------------------------------------------------------

TEST_CASE("chromatic: empty initial task set terminates immediately") {
  data_graph g = apps::make_pagerank_graph(6, gen::random_directed(6, 2.0, 3));
  auto parts = partition_in_memory(g, 3, 2, partition_method::hash);
  engine_options opts;
  auto before = g.data_digest();
  engine_result res = run_chromatic(parts, greedy_color(g),
                                    apps::make_pagerank_update({0.15, 1e-5, 6}), {}, opts);
  CHECK(res.updates == 0);
  CHECK(res.color_steps == 0);
  CHECK(gather_to(g, parts).data_digest() == before);
}

TEST_CASE("chromatic: invalid coloring rejected") {
  data_graph g = build_graph(2, {{0, 1}});
  auto parts = partition_in_memory(g, 2, 2, partition_method::bfs_blocks);
  coloring bad;
  bad.color = {0, 0};
  bad.count = 1;
  engine_options opts;
  CHECK_THROWS_AS(
      run_chromatic(parts, bad, apps::make_pagerank_update({0.15, 1e-5, 2}), {}, opts),
      invalid_coloring_error);
}

TEST_CASE("chromatic: budget exhaustion throws through the wrapper") {
  data_graph g = apps::make_pagerank_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}});
  auto parts = partition_in_memory(g, 2, 2, partition_method::hash);
  engine_options opts;
  opts.max_color_steps = 2;  // PageRank needs far more to converge
  CHECK_THROWS_AS(run_chromatic(parts, greedy_color(g),
                                apps::make_pagerank_update({0.15, 1e-12, 4}),
                                all_vertices(4), opts),
                  iteration_budget_error);
}

TEST_CASE("chromatic PageRank equals serial replay bit-exactly and matches the oracle") {
  data_graph g = apps::make_pagerank_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}});
  apps::pagerank_config cfg{0.15, 1e-12, 4};
  auto parts = partition_in_memory(g, 2, 2, partition_method::bfs_blocks);

  engine_options opts;
  opts.latency = {1, 0, 0};
  engine_result res = run_chromatic(parts, greedy_color(g), apps::make_pagerank_update(cfg),
                                    all_vertices(4), opts);
  data_graph final_state = gather_to(g, parts);

  auto verdict = verify_serializability(res.trace, g, final_state,
                                        apps::make_pagerank_update(cfg),
                                        consistency_model::edge);
  INFO(verdict.violation);
  CHECK(verdict.serializable);

  auto oracle = apps::pagerank_power_iteration(g, cfg, 1e-14);
  CHECK(apps::l1_distance(apps::extract_ranks(final_state), oracle) < 1e-8);
}

TEST_CASE("chromatic trace has no same-color adjacency overlap and steps barrier-separated") {
  auto edges = gen::random_directed(60, 3.0, 9);
  data_graph g = apps::make_pagerank_graph(60, edges);
  auto parts = partition_in_memory(g, 8, 4, partition_method::hash);
  engine_options opts;
  opts.workers = 3;  // intra-machine overlap is real with several workers
  opts.latency = {2, 1, 5};
  engine_result res = run_chromatic(parts, greedy_color(g),
                                    apps::make_pagerank_update({0.15, 1e-8, 60}),
                                    all_vertices(60), opts);
  data_graph final_state = gather_to(g, parts);
  auto verdict = verify_serializability(res.trace, g, final_state,
                                        apps::make_pagerank_update({0.15, 1e-8, 60}),
                                        consistency_model::edge);
  INFO(verdict.violation);
  CHECK(verdict.serializable);
  CHECK(res.updates > 60);
}

TEST_CASE("chromatic progress: a scheduled vertex runs at the next step of its color") {
  // chain 0-1-2: vertex updates schedule only their neighbors; seed vertex 0
  data_graph g = apps::make_pagerank_graph(3, {{0, 1}, {1, 2}, {2, 0}});
  auto parts = partition_in_memory(g, 3, 1, partition_method::hash);
  engine_options opts;
  update_fn once = [](scope& s) {
    // schedule neighbors exactly once, from vertex 0 only
    if (s.center() == 0 && apps::pagerank_vertex::decode(s.vertex_data()).rank_old == 0) {
      apps::pagerank_vertex v = apps::pagerank_vertex::decode(s.vertex_data());
      v.rank_old = 1;
      s.vertex_data_mut() = v.encode();
      for (std::size_t i = 0; i < s.num_neighbors(); ++i) s.schedule(s.neighbor(i));
    }
  };
  // initial rank_old must be 0 for the trigger
  for (vertex_id v = 0; v < 3; ++v)
    g.vertex_data(v) = apps::pagerank_vertex{0.5, 0.0}.encode();
  parts = partition_in_memory(g, 3, 1, partition_method::hash);
  engine_result res = run_chromatic(parts, greedy_color(g), once, {{0, 0.0}}, opts);
  // vertex 0 executed once, then its two neighbors each exactly once
  CHECK(res.updates == 3);
}

TEST_CASE("chromatic ALS: per-pair RMSE identical to the serial sweep oracle") {
  apps::als_problem prob = apps::make_als_synthetic(20, 20, 2, 2, 1234);
  apps::als_config cfg;
  cfg.d = 2;
  cfg.lambda = 1e-6;
  cfg.dynamic = false;

  std::vector<std::uint8_t> side(40, 0);
  for (vertex_id v = 20; v < 40; ++v) side[v] = 1;
  coloring col = bipartite_color(prob.graph, side);
  CHECK(col.count == 2);

  const std::size_t pairs = 50;
  auto oracle_rmse = apps::als_sweep_oracle(prob.graph, prob, cfg, pairs);

  auto parts = partition_in_memory(prob.graph, 8, 4, partition_method::hash);
  chromatic_engine eng(parts, col, apps::make_als_update(cfg), engine_options{});
  eng.add_sync("rmse", [&] {
    sync_task t = sync_sum_f64([d = cfg.d](scope& s) {
      double sq = 0.0;
      for (const auto& e : s.out_edges()) {
        auto x = apps::decode_latent(s.vertex_data(), d);
        auto y = apps::decode_latent(s.neighbor_data(e.target), d);
        double pred = 0.0;
        for (std::size_t i = 0; i < d; ++i) pred += x[i] * y[i];
        double err = apps::decode_rating(*e.data) - pred;
        sq += err * err;
      }
      return sq;
    });
    t.period = 2;  // once per color-step pair
    t.finalize = [n = double(prob.graph.num_edges())](const payload& p) {
      return payload_writer().f64(std::sqrt(sync_value_f64(p) / n)).take();
    };
    return t;
  }());
  eng.seed_all();
  eng.set_resweep_cycles(pairs - 1);  // first cycle consumes the seed
  engine_result res = eng.run();

  const auto& history = res.sync_history.at("rmse");
  REQUIRE(history.size() == pairs);
  for (std::size_t i = 0; i < pairs; ++i)
    CHECK(sync_value_f64(history[i].second) ==
          doctest::Approx(oracle_rmse[i]).epsilon(1e-12));
  CHECK(sync_value_f64(history.back().second) < 1e-3);
  // block coordinate descent: non-increasing RMSE per pair
  for (std::size_t i = 1; i < pairs; ++i)
    CHECK(sync_value_f64(history[i].second) <=
          sync_value_f64(history[i - 1].second) + 1e-12);
}

TEST_CASE("chromatic sync equals a frozen-copy evaluation") {
  auto edges = gen::random_directed(30, 2.0, 77);
  data_graph g = apps::make_pagerank_graph(30, edges);
  auto parts = partition_in_memory(g, 6, 3, partition_method::hash);

  chromatic_engine eng(parts, greedy_color(g),
                       apps::make_pagerank_update({0.15, 1e-9, 30}), engine_options{});
  sync_task sum = sync_sum_f64(
      [](scope& s) { return apps::pagerank_vertex::decode(s.vertex_data()).rank; });
  sum.period = 1;
  eng.add_sync("ranksum", sum);
  eng.seed(all_vertices(30));
  engine_result res = eng.run();

  // converged rank mass is 1 (column-stochastic weights)
  const auto& history = res.sync_history.at("ranksum");
  REQUIRE(!history.empty());
  CHECK(sync_value_f64(history.back().second) == doctest::Approx(1.0).epsilon(1e-6));

  // the final sync value equals the same task evaluated on the frozen
  // final state with the same per-machine fold grouping: bit-exact
  payload frozen = run_sync_pass(parts, sum, consistency_model::edge);
  CHECK(std::bit_cast<std::uint64_t>(sync_value_f64(history.back().second)) ==
        std::bit_cast<std::uint64_t>(sync_value_f64(frozen)));

  // and agrees with a single whole-graph fold up to reassociation
  data_graph final_state = gather_to(g, parts);
  payload whole = run_sync_pass(final_state, sum, consistency_model::edge);
  CHECK(sync_value_f64(whole) ==
        doctest::Approx(sync_value_f64(frozen)).epsilon(1e-12));
}

TEST_CASE("chromatic partition invariance: same atoms, any machine count, identical bits") {
  auto edges = gen::random_directed(100, 3.0, 55);
  data_graph g = apps::make_pagerank_graph(100, edges);
  apps::pagerank_config cfg{0.15, 1e-10, 100};
  coloring col = greedy_color(g);

  auto run_m = [&](machine_id m) {
    auto result = over_partition(g, 8, partition_method::hash);
    auto assign = place_atoms(result.index, m);
    std::vector<local_partition> parts;
    for (machine_id p = 0; p < m; ++p) {
      std::vector<atom_journal> mine;
      for (atom_id a = 0; a < 8; ++a)
        if (assign.of(a) == p) mine.push_back(result.journals[a]);
      parts.push_back(build_local_partition(result.index, assign, p, mine));
    }
    engine_options opts;
    opts.latency = {1, 2, 99};
    run_chromatic(parts, col, apps::make_pagerank_update(cfg), all_vertices(100), opts);
    return gather_to(g, parts).data_digest();
  };

  auto d1 = run_m(1), d2 = run_m(2), d4 = run_m(4);
  CHECK(d1 == d2);
  CHECK(d2 == d4);
}
