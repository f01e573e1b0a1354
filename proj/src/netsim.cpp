// SPDX-License-Identifier: Apache-2.0
#include "moeplan/netsim.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <stdexcept>
#include <tuple>

#include "moeplan/rng.hpp"

namespace moeplan {

bool link_exists(int node, Direction d, const MeshSpec& mesh) {
    const Coord c = node_coord(node, mesh);
    switch (d) {
        case kXPlus: return c.x + 1 < mesh.cols;
        case kXMinus: return c.x > 0;
        case kYPlus: return c.y + 1 < mesh.rows;
        case kYMinus: return c.y > 0;
    }
    return false;
}

std::vector<int> xy_path(Coord src, Coord dst, const MeshSpec& mesh) {
    auto inside = [&](Coord c) {
        return c.x >= 0 && c.x < mesh.cols && c.y >= 0 && c.y < mesh.rows;
    };
    if (!inside(src) || !inside(dst))
        throw std::invalid_argument("xy_path: coordinate outside mesh");
    std::vector<int> links;
    Coord cur = src;
    while (cur.x != dst.x) {
        const Direction d = cur.x < dst.x ? kXPlus : kXMinus;
        links.push_back(link_id(node_id(cur, mesh), d));
        cur.x += (d == kXPlus) ? 1 : -1;
    }
    while (cur.y != dst.y) {
        const Direction d = cur.y < dst.y ? kYPlus : kYMinus;
        links.push_back(link_id(node_id(cur, mesh), d));
        cur.y += (d == kYPlus) ? 1 : -1;
    }
    return links;
}

Topology::Topology(const MeshSpec& mesh) : mesh_(mesh) {
    const int D = mesh.node_count();
    paths_.resize(std::size_t(D) * std::size_t(D));
    for (int s = 0; s < D; ++s)
        for (int d = 0; d < D; ++d)
            paths_[std::size_t(s) * D + std::size_t(d)] =
                xy_path(node_coord(s, mesh), node_coord(d, mesh), mesh);
}

const std::vector<int>& Topology::path(int src, int dst) const {
    return paths_[std::size_t(src) * mesh_.node_count() + std::size_t(dst)];
}

std::vector<CommTask> build_tasks(const LayerTokens& tokens, const LayerPlacement& placement,
                                  const NodeMapping& mapping, const ModelSpec& model,
                                  std::uint64_t seed) {
    const int E = placement.num_experts;
    std::vector<int> host(std::size_t(E), -1);
    for (int i = 0; i < E; ++i) {
        if (placement.active_nodes(i).empty())
            throw std::invalid_argument("unplaced expert " + std::to_string(i));
        host[std::size_t(i)] = placement.dominant_node(i);
    }

    const std::int64_t partial_bytes =
        std::int64_t(model.hidden_size) * model.bytes_per_activation;
    Rng rng(seed);
    std::vector<CommTask> out;
    int next_id = 0;
    std::vector<int> token_hosts;
    for (const TokenExperts& ids : tokens) {
        token_hosts.clear();
        for (int i : ids) token_hosts.push_back(host[std::size_t(i)]);
        std::sort(token_hosts.begin(), token_hosts.end());
        token_hosts.erase(std::unique(token_hosts.begin(), token_hosts.end()), token_hosts.end());
        // one draw per token keeps the stream aligned across placements
        const int dst = token_hosts[std::size_t(rng.below(token_hosts.size()))];
        for (int i : ids) {
            const int src = host[std::size_t(i)];
            if (src == dst) continue;
            out.push_back(CommTask{next_id++, mapping.physical(src), mapping.physical(dst),
                                   partial_bytes, 0.0});
        }
    }
    return out;
}

namespace {

struct ReadyChunk {
    double ready_s;
    int task;
    int chunk;
    int hop;
    bool operator<(const ReadyChunk& o) const {
        return std::tie(ready_s, task, chunk) < std::tie(o.ready_s, o.task, o.chunk);
    }
};

enum class EventKind : int { ChunkReady = 0, LinkFree = 1 };

struct Event {
    double time_s;
    EventKind kind;
    int link;   // LinkFree
    ReadyChunk chunk;  // ChunkReady
    bool operator>(const Event& o) const {
        // ChunkReady before LinkFree at equal times so the freed link sees
        // every chunk that became ready by then.
        return std::tie(time_s, kind, chunk.task, chunk.chunk, link) >
               std::tie(o.time_s, o.kind, o.chunk.task, o.chunk.chunk, o.link);
    }
};

}  // namespace

SimReport simulate(const std::vector<CommTask>& tasks, const MeshSpec& mesh,
                   std::int64_t chunk_bytes) {
    if (chunk_bytes < 1) throw std::invalid_argument("simulate: chunk_bytes must be >= 1");
    const Topology topo(mesh);
    const int D = mesh.node_count();
    const double bw = mesh.link_bandwidth_Bps;
    const double alpha = mesh.per_hop_latency_s;

    SimReport report;
    report.per_link_busy_s.assign(std::size_t(link_count(mesh)), 0.0);
    report.link_schedule.assign(std::size_t(link_count(mesh)), {});
    report.per_node_sent_bytes.assign(std::size_t(D), 0);
    report.per_node_received_bytes.assign(std::size_t(D), 0);
    report.task_completion_times_s.assign(tasks.size(), 0.0);

    struct TaskState {
        const std::vector<int>* path;
        std::int64_t bytes;
        int chunks;
        std::int64_t last_chunk_bytes;
    };
    std::vector<TaskState> state(tasks.size());

    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        const CommTask& task = tasks[t];
        if (task.src < 0 || task.src >= D || task.dst < 0 || task.dst >= D)
            throw std::invalid_argument("simulate: task endpoint outside mesh");
        TaskState& st = state[t];
        st.path = &topo.path(task.src, task.dst);
        st.bytes = task.bytes;
        if (task.src == task.dst || task.bytes == 0) {
            st.chunks = 0;
            report.task_completion_times_s[t] = task.release_time_s;
            report.makespan_s = std::max(report.makespan_s, task.release_time_s);
            continue;
        }
        st.chunks = int((task.bytes + chunk_bytes - 1) / chunk_bytes);
        st.last_chunk_bytes = task.bytes - std::int64_t(st.chunks - 1) * chunk_bytes;
        report.per_node_sent_bytes[std::size_t(task.src)] += task.bytes;
        report.per_node_received_bytes[std::size_t(task.dst)] += task.bytes;
        for (int c = 0; c < st.chunks; ++c)
            events.push(Event{task.release_time_s, EventKind::ChunkReady, -1,
                              ReadyChunk{task.release_time_s, int(t), c, 0}});
    }

    std::vector<std::set<ReadyChunk>> waiting(static_cast<std::size_t>(link_count(mesh)));
    std::vector<bool> busy(std::size_t(link_count(mesh)), false);

    auto chunk_size = [&](int task, int chunk) -> std::int64_t {
        return (chunk + 1 == state[std::size_t(task)].chunks)
                   ? state[std::size_t(task)].last_chunk_bytes
                   : chunk_bytes;
    };

    auto start_transmission = [&](int link, const ReadyChunk& rc, double now) {
        const TaskState& st = state[std::size_t(rc.task)];
        const double duration = double(chunk_size(rc.task, rc.chunk)) / bw;
        busy[std::size_t(link)] = true;
        report.link_schedule[std::size_t(link)].push_back(BusyInterval{now, now + duration});
        report.per_link_busy_s[std::size_t(link)] += duration;
        events.push(Event{now + duration, EventKind::LinkFree, link, ReadyChunk{0, 0, 0, 0}});
        const double arrival = now + duration + alpha;
        if (rc.hop + 1 < int(st.path->size())) {
            events.push(Event{arrival, EventKind::ChunkReady, -1,
                              ReadyChunk{arrival, rc.task, rc.chunk, rc.hop + 1}});
        } else {
            double& done = report.task_completion_times_s[std::size_t(rc.task)];
            done = std::max(done, arrival);
            report.makespan_s = std::max(report.makespan_s, arrival);
        }
    };

    while (!events.empty()) {
        const Event ev = events.top();
        events.pop();
        if (ev.kind == EventKind::ChunkReady) {
            const int link = (*state[std::size_t(ev.chunk.task)].path)[std::size_t(ev.chunk.hop)];
            if (!busy[std::size_t(link)]) {
                start_transmission(link, ev.chunk, ev.time_s);
            } else {
                waiting[std::size_t(link)].insert(ev.chunk);
            }
        } else {
            busy[std::size_t(ev.link)] = false;
            std::set<ReadyChunk>& queue = waiting[std::size_t(ev.link)];
            if (!queue.empty()) {
                const ReadyChunk next = *queue.begin();
                queue.erase(queue.begin());
                start_transmission(ev.link, next, ev.time_s);
            }
        }
    }
    return report;
}

std::vector<int> serpentine_ring(const MeshSpec& mesh) {
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(mesh.node_count()));
    for (int y = 0; y < mesh.rows; ++y) {
        if (y % 2 == 0)
            for (int x = 0; x < mesh.cols; ++x) order.push_back(node_id(Coord{x, y}, mesh));
        else
            for (int x = mesh.cols - 1; x >= 0; --x) order.push_back(node_id(Coord{x, y}, mesh));
    }
    return order;
}

double simulate_ring_allreduce(const MeshSpec& mesh, std::int64_t message_bytes,
                               int chunk_count) {
    if (message_bytes < 0) throw std::invalid_argument("message_bytes must be nonnegative");
    if (chunk_count < 1) throw std::invalid_argument("chunk_count must be >= 1");
    const int D = mesh.node_count();
    if (D < 2 || message_bytes == 0) return 0.0;

    const std::vector<int> ring = serpentine_ring(mesh);
    const int steps = 2 * (D - 1);
    // Each node moves one full message volume around the ring across all
    // steps; earlier steps carry the remainder so the sizes sum exactly.
    const std::int64_t base = message_bytes / steps;
    const std::int64_t extra = message_bytes % steps;

    std::vector<CommTask> tasks;
    tasks.reserve(std::size_t(steps) * std::size_t(D));
    int id = 0;
    for (int s = 0; s < steps; ++s) {
        const std::int64_t step_bytes = base + (s < extra ? 1 : 0);
        if (step_bytes == 0) continue;
        for (int j = 0; j < D; ++j) {
            tasks.push_back(CommTask{id++, ring[std::size_t(j)],
                                     ring[std::size_t((j + 1) % D)], step_bytes, 0.0});
        }
    }
    const std::int64_t chunk = std::max<std::int64_t>(1, (base > 0 ? base : 1) / chunk_count);
    return simulate(tasks, mesh, chunk).makespan_s;
}

}  // namespace moeplan
