#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <atomgraph/atom.hpp>
#include <atomgraph/apps/pagerank.hpp>
#include <atomgraph/gen.hpp>
#include <atomgraph/partition.hpp>

using namespace atomgraph;
namespace fs = std::filesystem;

namespace {

struct temp_dir {
  fs::path path;
  temp_dir() {
    path = fs::temp_directory_path() / ("atomgraph_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~temp_dir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

payload slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::string& p, const payload& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size()));
}

data_graph toy_graph() {
  // payloads distinguish every element
  std::vector<payload> vdata = {{10}, {11}, {12}, {13}};
  std::vector<payload> edata = {{20}, {21}, {22}, {23}, {24}};
  return build_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}}, vdata, edata);
}

}  // namespace

TEST_CASE("empty journal writes a 16-byte header and round-trips") {
  temp_dir dir;
  atom_journal j;
  j.id = 7;
  write_atom(j, dir.file("a.atom"));
  CHECK(fs::file_size(dir.file("a.atom")) == 16);
  atom_journal back = read_atom(dir.file("a.atom"));
  CHECK(back.id == 7);
  CHECK(back.commands.empty());
}

TEST_CASE("journal round-trips with order preserved") {
  temp_dir dir;
  atom_journal j;
  j.id = 3;
  j.commands.push_back(atom_command::vertex(5000, {1, 2, 3}));
  j.commands.push_back(atom_command::edge(42, 314, {9}));
  j.commands.push_back(atom_command::ghost_vertex(99, 1, {}));
  j.commands.push_back(atom_command::ghost_edge(99, 5000, {7, 7}));
  write_atom(j, dir.file("a.atom"));
  atom_journal back = read_atom(dir.file("a.atom"));
  CHECK(back == j);
}

TEST_CASE("truncation by one byte is detected") {
  temp_dir dir;
  atom_journal j;
  j.id = 1;
  j.commands.push_back(atom_command::vertex(1, {1}));
  j.commands.push_back(atom_command::edge(1, 2, {2}));
  write_atom(j, dir.file("a.atom"));
  payload data = slurp(dir.file("a.atom"));
  data.pop_back();
  spit(dir.file("trunc.atom"), data);
  CHECK_THROWS_AS(read_atom(dir.file("trunc.atom")), corrupt_atom_file_error);
}

TEST_CASE("every 1-byte truncation of a journal is detected") {
  temp_dir dir;
  atom_journal j;
  j.id = 2;
  j.commands.push_back(atom_command::vertex(10, {1, 2}));
  j.commands.push_back(atom_command::ghost_vertex(11, 0, {3}));
  write_atom(j, dir.file("a.atom"));
  payload data = slurp(dir.file("a.atom"));
  // cut == 16 is excluded: a nonempty journal truncated to its bare header is
  // indistinguishable from a valid empty journal by format design
  for (std::size_t cut = 17; cut < data.size(); ++cut) {
    payload trunc(data.begin(), data.begin() + long(cut));
    spit(dir.file("t.atom"), trunc);
    CHECK_THROWS_AS(read_atom(dir.file("t.atom")), corrupt_atom_file_error);
  }
}

TEST_CASE("corrupted byte fails the checksum") {
  temp_dir dir;
  atom_journal j;
  j.id = 1;
  j.commands.push_back(atom_command::vertex(1, {1, 2, 3, 4}));
  write_atom(j, dir.file("a.atom"));
  payload data = slurp(dir.file("a.atom"));
  data[20] ^= 0xff;
  spit(dir.file("bad.atom"), data);
  CHECK_THROWS_AS(read_atom(dir.file("bad.atom")), corrupt_atom_file_error);
}

TEST_CASE("append zero commands leaves records identical") {
  temp_dir dir;
  atom_journal j;
  j.id = 4;
  j.commands.push_back(atom_command::vertex(1, {1}));
  write_atom(j, dir.file("a.atom"));
  payload before = slurp(dir.file("a.atom"));
  append_commands(dir.file("a.atom"), {});
  payload after = slurp(dir.file("a.atom"));
  REQUIRE(before.size() == after.size());
  // identical except possibly the header timestamp at bytes [12, 16)
  for (std::size_t i = 0; i < before.size(); ++i)
    if (i < 12 || i >= 16) CHECK(before[i] == after[i]);
}

TEST_CASE("append then read returns old commands followed by new") {
  temp_dir dir;
  atom_journal j;
  j.id = 4;
  j.commands.push_back(atom_command::vertex(1, {1}));
  write_atom(j, dir.file("a.atom"));
  append_commands(dir.file("a.atom"), {atom_command::vertex(2, {5})});
  atom_journal back = read_atom(dir.file("a.atom"));
  REQUIRE(back.commands.size() == 2);
  CHECK(back.commands[0] == atom_command::vertex(1, {1}));
  CHECK(back.commands[1] == atom_command::vertex(2, {5}));
}

TEST_CASE("atom index round-trips") {
  temp_dir dir;
  atom_index idx;
  idx.k = 2;
  idx.total_vertices = 10;
  idx.total_edges = 20;
  idx.atoms.push_back({"atom_0000.atom", 5, 12});
  idx.atoms.push_back({"atom_0001.atom", 5, 8});
  idx.meta_edges = {{0, 1}};
  write_atom_index(idx, dir.file("index"));
  atom_index back = read_atom_index(dir.file("index"));
  CHECK(back.k == 2);
  CHECK(back.total_vertices == 10);
  CHECK(back.atoms[0].location == "atom_0000.atom");
  CHECK(back.atoms[1].owned_edges == 8);
  CHECK(back.meta_edges == idx.meta_edges);

  payload data = slurp(dir.file("index"));
  data.pop_back();
  spit(dir.file("bad"), data);
  CHECK_THROWS_AS(read_atom_index(dir.file("bad")), corrupt_atom_file_error);
}

TEST_CASE("over_partition k=1: single atom, no ghosts, no meta-edges") {
  data_graph g = toy_graph();
  auto parts = over_partition(g, 1, partition_method::hash);
  REQUIRE(parts.journals.size() == 1);
  CHECK(parts.journals[0].owned_vertices().size() == 4);
  CHECK(parts.journals[0].ghost_vertices().empty());
  CHECK(parts.index.meta_edges.empty());
}

TEST_CASE("over_partition 2-cycle into k=2") {
  data_graph g = build_graph(2, {{0, 1}, {1, 0}}, {{1}, {2}}, {{3}, {4}});
  auto parts = over_partition(g, 2, partition_method::bfs_blocks);
  REQUIRE(parts.journals.size() == 2);
  for (const auto& j : parts.journals) {
    CHECK(j.owned_vertices().size() == 1);
    CHECK(j.ghost_vertices().size() == 1);
  }
  REQUIRE(parts.index.meta_edges.size() == 1);
  CHECK(parts.index.meta_edges[0] == std::pair<atom_id, atom_id>{0, 1});
}

TEST_CASE("over_partition rejects bad k") {
  data_graph g = toy_graph();
  CHECK_THROWS_AS(over_partition(g, 0, partition_method::hash), k_too_large_error);
  CHECK_THROWS_AS(over_partition(g, 5, partition_method::hash), k_too_large_error);
}

TEST_CASE("replaying all atoms reproduces the graph") {
  for (auto method : {partition_method::hash, partition_method::bfs_blocks}) {
    auto edges = gen::random_directed(1000, 4.0, 31337);
    data_graph g = apps::make_pagerank_graph(1000, edges);
    auto parts = over_partition(g, 32, method);

    // structural diff: merge owned elements from all journals
    std::set<vertex_id> verts;
    std::set<std::pair<vertex_id, vertex_id>> eset;
    for (const auto& j : parts.journals) {
      for (const auto& c : j.commands) {
        if (c.op == atom_opcode::add_vertex) {
          CHECK(verts.insert(c.id_a).second);  // owned exactly once
          CHECK(c.data == g.vertex_data(c.id_a));
        } else if (c.op == atom_opcode::add_edge) {
          CHECK(eset.insert({c.id_a, c.id_b}).second);
          edge_index idx;
          REQUIRE(g.find_edge(c.id_a, c.id_b, idx));
          CHECK(c.data == g.edge_data(idx));
        }
      }
    }
    CHECK(verts.size() == g.num_vertices());
    CHECK(eset.size() == g.num_edges());

    // meta-graph soundness: every crossing edge has a meta-edge
    std::vector<atom_id> owner(g.num_vertices());
    for (const auto& j : parts.journals)
      for (vertex_id v : j.owned_vertices()) owner[v] = j.id;
    std::set<std::pair<atom_id, atom_id>> meta(parts.index.meta_edges.begin(),
                                               parts.index.meta_edges.end());
    for (edge_index e = 0; e < g.num_edges(); ++e) {
      atom_id a = owner[g.edge(e).source], b = owner[g.edge(e).target];
      if (a != b) CHECK(meta.count({std::min(a, b), std::max(a, b)}) == 1);
    }

    // journal invariant: every edge endpoint is owned or ghost
    for (const auto& j : parts.journals) {
      std::set<vertex_id> known;
      for (vertex_id v : j.owned_vertices()) known.insert(v);
      for (vertex_id v : j.ghost_vertices()) {
        CHECK(known.count(v) == 0);  // owned and ghost sets disjoint
        known.insert(v);
      }
      for (const auto& c : j.commands) {
        if (c.op == atom_opcode::add_edge || c.op == atom_opcode::add_ghost_edge) {
          CHECK(known.count(c.id_a) == 1);
          CHECK(known.count(c.id_b) == 1);
        }
      }
    }
  }
}

TEST_CASE("place_atoms balances and handles edge cases") {
  data_graph g = apps::make_pagerank_graph(64, gen::random_directed(64, 3.0, 5));
  auto parts = over_partition(g, 8, partition_method::bfs_blocks);

  SUBCASE("k=8 equal atoms on m=4: two each") {
    auto assign = place_atoms(parts.index, 4);
    std::vector<int> count(4, 0);
    for (atom_id a = 0; a < 8; ++a) ++count[assign.of(a)];
    for (int c : count) CHECK(c == 2);
  }
  SUBCASE("m=1 puts everything on machine 0") {
    auto assign = place_atoms(parts.index, 1);
    for (atom_id a = 0; a < 8; ++a) CHECK(assign.of(a) == 0);
  }
  SUBCASE("more machines than atoms rejected") {
    CHECK_THROWS_AS(place_atoms(parts.index, 9), more_machines_than_atoms_error);
  }
}

TEST_CASE("place_atoms stays within 25% of mean load") {
  auto edges = gen::grid3d(8, 8, 8);
  data_graph g = apps::make_pagerank_graph(512, edges);
  auto parts = over_partition(g, 16, partition_method::bfs_blocks);
  auto assign = place_atoms(parts.index, 4);
  std::vector<std::uint64_t> load(4, 0);
  for (atom_id a = 0; a < 16; ++a)
    load[assign.of(a)] += parts.index.atoms[a].owned_vertices;
  double mean = 512.0 / 4.0;
  for (auto l : load) {
    CHECK(double(l) <= mean * 1.25);
    CHECK(double(l) >= mean * 0.75);
  }
}

TEST_CASE("place_atoms beats random placement on meta-edge cut") {
  // 64 atoms from a grid, m=4: greedy + refinement vs seeded random placement
  auto edges = gen::grid3d(12, 12, 12);
  data_graph g = apps::make_pagerank_graph(12 * 12 * 12, edges);
  auto parts = over_partition(g, 64, partition_method::bfs_blocks);

  auto cut_of = [&](const std::vector<machine_id>& am) {
    int cut = 0;
    for (const auto& [a, b] : parts.index.meta_edges)
      if (am[a] != am[b]) ++cut;
    return cut;
  };

  auto assign = place_atoms(parts.index, 4);
  int ours = cut_of(assign.atom_machine);

  double random_total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    rng r(seed + 1);
    std::vector<machine_id> am(64);
    for (auto& m : am) m = machine_id(r.below(4));
    random_total += cut_of(am);
  }
  CHECK(double(ours) <= random_total / 10.0);
}

TEST_CASE("load_partition: k=1 single machine equals the whole graph") {
  data_graph g = toy_graph();
  auto parts = partition_in_memory(g, 1, 1, partition_method::hash);
  REQUIRE(parts.size() == 1);
  const auto& p = parts[0];
  CHECK(p.owned_vertices().size() == 4);
  CHECK(p.edges().size() == 5);
  for (const auto& v : p.vertices()) {
    CHECK(v.owned);
    CHECK(v.version == 0);
    CHECK(v.data == g.vertex_data(v.vid));
    CHECK(v.ghost_holders.empty());
  }
}

TEST_CASE("load_partition: 2-cycle split across two machines") {
  data_graph g = build_graph(2, {{0, 1}, {1, 0}}, {{1}, {2}}, {{3}, {4}});
  auto parts = partition_in_memory(g, 2, 2, partition_method::bfs_blocks);
  REQUIRE(parts.size() == 2);
  for (const auto& p : parts) {
    CHECK(p.owned_vertices().size() == 1);
    CHECK(p.vertices().size() == 2);  // one owned, one ghost
    CHECK(p.edges().size() == 2);     // both directed edges present locally
    int owned_edges = 0;
    for (const auto& e : p.edges()) owned_edges += e.owned ? 1 : 0;
    CHECK(owned_edges == 1);  // owner(edge) = owner(source)
  }
}

TEST_CASE("load_partition structural invariants on random graphs") {
  auto edges = gen::random_directed(300, 3.0, 404);
  data_graph g = apps::make_pagerank_graph(300, edges);
  for (auto [k, m] : std::vector<std::pair<std::uint32_t, machine_id>>{
           {8, 2}, {16, 4}, {5, 5}, {300, 3}}) {
    auto parts = partition_in_memory(g, k, m, partition_method::hash);

    std::set<vertex_id> owned_verts;
    std::set<std::pair<vertex_id, vertex_id>> owned_edges;
    for (const auto& p : parts) {
      for (const auto& v : p.vertices())
        if (v.owned) CHECK(owned_verts.insert(v.vid).second);
      for (const auto& e : p.edges())
        if (e.owned) CHECK(owned_edges.insert({e.source, e.target}).second);
      // every crossing edge's remote endpoint is a local ghost
      for (const auto& e : p.edges()) {
        CHECK(p.has_vertex(e.source));
        CHECK(p.has_vertex(e.target));
      }
    }
    CHECK(owned_verts.size() == g.num_vertices());
    CHECK(owned_edges.size() == g.num_edges());

    // ghost holder lists point at machines that really hold a ghost
    for (const auto& p : parts) {
      for (const auto& v : p.vertices()) {
        if (!v.owned) continue;
        for (machine_id h : v.ghost_holders) {
          REQUIRE(h != p.machine);
          CHECK(parts[h].has_vertex(v.vid));
          CHECK_FALSE(parts[h].vertex(v.vid).owned);
        }
      }
    }
  }
}

TEST_CASE("journal replay is idempotent") {
  data_graph g = toy_graph();
  auto result = over_partition(g, 2, partition_method::hash);
  auto assign = place_atoms(result.index, 2);
  auto load = [&](machine_id mid) {
    std::vector<atom_journal> mine;
    for (atom_id a = 0; a < 2; ++a)
      if (assign.of(a) == mid) mine.push_back(result.journals[a]);
    return build_local_partition(result.index, assign, mid, mine);
  };
  local_partition p1 = load(0), p2 = load(0);
  REQUIRE(p1.vertices().size() == p2.vertices().size());
  for (std::size_t i = 0; i < p1.vertices().size(); ++i) {
    CHECK(p1.vertices()[i].vid == p2.vertices()[i].vid);
    CHECK(p1.vertices()[i].data == p2.vertices()[i].data);
    CHECK(p1.vertices()[i].owned == p2.vertices()[i].owned);
  }
}

TEST_CASE("write, load and append through the filesystem") {
  temp_dir dir;
  data_graph g = toy_graph();
  auto result = over_partition(g, 2, partition_method::bfs_blocks);
  for (const auto& j : result.journals)
    write_atom(j, dir.file(result.index.atoms[j.id].location));
  write_atom_index(result.index, dir.file("index"));

  atom_index idx = read_atom_index(dir.file("index"));
  auto assign = place_atoms(idx, 2);
  local_partition p0 = load_partition(idx, assign, 0, dir.path.string());
  local_partition p1 = load_partition(idx, assign, 1, dir.path.string());
  CHECK(p0.owned_vertices().size() + p1.owned_vertices().size() == 4);

  // append a fresh vertex to atom 0 and reload: present on its machine
  append_commands(dir.file(idx.atoms[0].location),
                  {atom_command::vertex(4, {99})});
  local_partition p0b = load_partition(idx, assign, assign.of(0), dir.path.string());
  CHECK(p0b.has_vertex(4));
  CHECK(p0b.vertex(4).data == payload{99});

  // missing atom file
  fs::remove(dir.file(idx.atoms[1].location));
  CHECK_THROWS_AS(load_partition(idx, assign, assign.of(1), dir.path.string()),
                  missing_atom_error);
}
