// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "moeplan/trace.hpp"
#include "moeplan/types.hpp"

namespace moeplan {

// Mesh coordinate, x = column, y = row.
struct Coord {
    int x = 0;
    int y = 0;
    bool operator==(const Coord&) const = default;
};

inline Coord node_coord(int node, const MeshSpec& mesh) {
    return Coord{node % mesh.cols, node / mesh.cols};
}
inline int node_id(Coord c, const MeshSpec& mesh) { return c.y * mesh.cols + c.x; }

// Directed links leave each node in one of four directions; the link id is
// node*4 + direction. Boundary directions have no physical link.
enum Direction : int { kXPlus = 0, kXMinus = 1, kYPlus = 2, kYMinus = 3 };

inline int link_count(const MeshSpec& mesh) { return mesh.node_count() * 4; }
inline int link_id(int node, Direction d) { return node * 4 + int(d); }
bool link_exists(int node, Direction d, const MeshSpec& mesh);

// Dimension-ordered route: all x hops toward the destination column first,
// then the y hops. Hop count equals the Manhattan distance. Throws when a
// coordinate lies outside the mesh.
std::vector<int> xy_path(Coord src, Coord dst, const MeshSpec& mesh);

// Route cache; computes every pair once per mesh.
class Topology {
public:
    explicit Topology(const MeshSpec& mesh);
    const MeshSpec& mesh() const { return mesh_; }
    const std::vector<int>& path(int src, int dst) const;

private:
    MeshSpec mesh_;
    std::vector<std::vector<int>> paths_;  // indexed src * D + dst
};

struct CommTask {
    int id = 0;
    int src = 0;
    int dst = 0;
    std::int64_t bytes = 0;
    double release_time_s = 0.0;
};

struct BusyInterval {
    double start_s = 0.0;
    double end_s = 0.0;
};

struct SimReport {
    double makespan_s = 0.0;
    std::vector<double> per_link_busy_s;                    // length D*4, 0 for absent links
    std::vector<std::vector<BusyInterval>> link_schedule;   // per link, time-ordered
    std::vector<std::int64_t> per_node_sent_bytes;
    std::vector<std::int64_t> per_node_received_bytes;
    std::vector<double> task_completion_times_s;            // indexed by position in input
};

// Aggregation traffic for one (iteration, layer) slice: every activated
// expert sends a partial result of h * bytes_per_activation from its hosting
// node to a destination drawn uniformly (seeded) from the token's hosting
// set. Split experts contribute from the node with the largest share (ties to
// the lowest node id). Local contributions are dropped. src/dst are physical
// node ids after applying the mapping.
std::vector<CommTask> build_tasks(const LayerTokens& tokens, const LayerPlacement& placement,
                                  const NodeMapping& mapping, const ModelSpec& model,
                                  std::uint64_t seed);

// Chunk-level store-and-forward simulation. Tasks split into chunks of
// chunk_bytes (last chunk pro-rata); a chunk occupies each link on its route
// for size/BW seconds and arrives per_hop_latency later; it may enter link
// k+1 only after fully traversing link k. Contention per link is resolved
// earliest-ready-first with ties broken by (task id, chunk index). The result
// is a deterministic function of the inputs.
SimReport simulate(const std::vector<CommTask>& tasks, const MeshSpec& mesh,
                   std::int64_t chunk_bytes);

// Ring all-reduce embedded on a serpentine (boustrophedon) ring over the mesh
// rows. Runs 2*(D-1) ring steps moving one node-volume of message_bytes in
// total per node, so with zero hop latency the makespan approaches
// message_bytes / link_bandwidth, matching the analytical model. chunk_count
// controls pipelining granularity per step.
double simulate_ring_allreduce(const MeshSpec& mesh, std::int64_t message_bytes,
                               int chunk_count = 8);

// Serpentine node order used by the ring embedding.
std::vector<int> serpentine_ring(const MeshSpec& mesh);

}  // namespace moeplan
