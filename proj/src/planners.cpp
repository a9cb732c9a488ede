#include "alcon/planners.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <limits>
#include <memory>

namespace alcon {

std::string_view to_string(PlannerSource s) {
  switch (s) {
    case PlannerSource::RF: return "RF";
    case PlannerSource::TFP: return "TFP";
    case PlannerSource::RLP_ON: return "RLP_ON";
    case PlannerSource::RLP_ALC: return "RLP_ALC";
    case PlannerSource::FUSED: return "FUSED";
  }
  return "?";
}

FrontierSet detect_frontiers(const OccupancyGrid& observed) {
  FrontierSet out;
  const int h = observed.height();
  const int w = observed.width();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (observed.at({r, c}) != CellState::Free) continue;
      const bool frontier = (r > 0 && observed.at({r - 1, c}) == CellState::Unknown) ||
                            (r + 1 < h && observed.at({r + 1, c}) == CellState::Unknown) ||
                            (c > 0 && observed.at({r, c - 1}) == CellState::Unknown) ||
                            (c + 1 < w && observed.at({r, c + 1}) == CellState::Unknown);
      if (frontier) out.cells.push_back({r, c});
    }
  }
  return out;
}

SubgoalProposal rf_plan(const FrontierSet& frontiers, const GridGeometry& geometry, Rng& rng) {
  if (frontiers.empty()) throw Error("no frontier");
  const Cell pick = frontiers.cells[uniform_index(rng, frontiers.size())];
  return {geometry.cell_center(pick), 0.0, PlannerSource::RF, true};
}

Cell nearest_frontier(Point p, const FrontierSet& frontiers, const GridGeometry& geometry) {
  if (frontiers.empty()) throw Error("no frontier");
  Cell best = frontiers.cells.front();
  double best_d = squared_distance(p, geometry.cell_center(best));
  for (const Cell& c : frontiers.cells) {
    const double d = squared_distance(p, geometry.cell_center(c));
    if (d < best_d || (d == best_d && c < best)) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

std::vector<Peak> extract_peaks(const ScoreMap& score, const TfpConfig& cfg) {
  const GridGeometry& g = score.geometry();
  const int h = g.height;
  const int w = g.width;
  std::vector<int> label(g.size(), -1);
  std::vector<Peak> candidates;
  std::vector<std::size_t> members;
  std::deque<std::size_t> queue;

  for (std::size_t start = 0; start < g.size(); ++start) {
    const std::uint8_t v = score[start];
    if (v == 0 || label[start] >= 0) continue;
    // Flood the equal-valued plateau and check whether anything around it is higher.
    const int id = static_cast<int>(candidates.size());
    members.clear();
    queue.assign(1, start);
    label[start] = id;
    bool maximal = true;
    double sum_r = 0.0, sum_c = 0.0;
    while (!queue.empty()) {
      const std::size_t idx = queue.front();
      queue.pop_front();
      members.push_back(idx);
      const Cell c = g.cell_at(idx);
      sum_r += c.row;
      sum_c += c.col;
      for (const auto& d : kNeighbours8) {
        const Cell n{c.row + d[0], c.col + d[1]};
        if (n.row < 0 || n.row >= h || n.col < 0 || n.col >= w) continue;
        const std::size_t ni = g.index(n);
        const std::uint8_t nv = score[ni];
        if (nv > v) maximal = false;
        if (nv == v && label[ni] < 0) {
          label[ni] = id;
          queue.push_back(ni);
        }
      }
    }
    Peak peak{{-1, -1}, v};
    if (maximal) {
      const double cr = sum_r / static_cast<double>(members.size());
      const double cc = sum_c / static_cast<double>(members.size());
      double best = std::numeric_limits<double>::infinity();
      for (const std::size_t idx : members) {
        const Cell c = g.cell_at(idx);
        const double d = (c.row - cr) * (c.row - cr) + (c.col - cc) * (c.col - cc);
        if (d < best || (d == best && c < peak.cell)) {
          best = d;
          peak.cell = c;
        }
      }
    }
    candidates.push_back(peak);
  }

  std::vector<Peak> maxima;
  for (const Peak& p : candidates)
    if (p.cell.row >= 0) maxima.push_back(p);
  std::sort(maxima.begin(), maxima.end(), [](const Peak& a, const Peak& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.cell < b.cell;
  });

  std::vector<Peak> kept;
  const double nms2 = cfg.nms_radius_m * cfg.nms_radius_m;
  for (const Peak& p : maxima) {
    if (static_cast<int>(kept.size()) >= cfg.max_peaks) break;
    const Point pc = g.cell_center(p.cell);
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Peak& k) {
      return squared_distance(pc, g.cell_center(k.cell)) < nms2;
    });
    if (!suppressed) kept.push_back(p);
  }
  return kept;
}

TfpResult tfp_plan(const ScoreMap& observed_score, const TfpConfig& cfg) {
  TfpResult out;
  out.clean = ScoreMap(observed_score.geometry(), 0);
  out.peaks = extract_peaks(observed_score, cfg);
  out.proposal.source = PlannerSource::TFP;
  if (out.peaks.empty()) {
    out.proposal.valid = false;
    return out;
  }
  const GridGeometry& g = observed_score.geometry();
  for (std::size_t i = 0; i < out.peaks.size() && i < kRankScores.size(); ++i)
    stamp_disk(out.clean, g.cell_center(out.peaks[i].cell), cfg.disk_radius_m, kRankScores[i]);
  out.proposal.point = g.cell_center(out.peaks.front().cell);
  out.proposal.score = out.peaks.front().value;
  return out;
}

bool move_allowed(const OccupancyGrid& grid, Cell from, Cell to, bool unknown_traversable) {
  if (!grid.contains(to) || !traversable(grid.at(to), unknown_traversable)) return false;
  const int dr = to.row - from.row;
  const int dc = to.col - from.col;
  if (dr != 0 && dc != 0) {
    // No corner cutting: both orthogonal cells must be passable.
    if (grid.at({from.row + dr, from.col}) == CellState::Obstacle) return false;
    if (grid.at({from.row, from.col + dc}) == CellState::Obstacle) return false;
    if (!unknown_traversable && (grid.at({from.row + dr, from.col}) == CellState::Unknown ||
                                 grid.at({from.row, from.col + dc}) == CellState::Unknown))
      return false;
  }
  return true;
}

namespace {

// Reused per thread; generation stamps avoid clearing the arrays between calls.
struct SearchBuffers {
  std::vector<double> key;
  std::vector<PathSteps> steps;
  std::vector<int> parent;
  std::vector<std::uint32_t> seen;
  std::vector<std::uint32_t> closed;
  std::uint32_t generation = 0;

  void prepare(std::size_t n) {
    if (key.size() != n) {
      key.assign(n, 0.0);
      steps.assign(n, {});
      parent.assign(n, -1);
      seen.assign(n, 0);
      closed.assign(n, 0);
      generation = 0;
    }
    if (++generation == 0) {
      std::fill(seen.begin(), seen.end(), 0);
      std::fill(closed.begin(), closed.end(), 0);
      generation = 1;
    }
  }
};

// Out of line so the hot loop holds a plain reference instead of going
// through the thread-local init wrapper.
[[gnu::noinline]] SearchBuffers& search_buffers() {
  thread_local SearchBuffers buffers;
  return buffers;
}

}  // namespace

namespace {

// Best-first search over step counts. `heuristic` must be a consistent lower
// bound in step units (zero gives plain Dijkstra).
template <typename Target, typename Heuristic>
std::optional<Path> search(const OccupancyGrid& grid, Cell a, const Target& is_target, const Heuristic& heuristic,
                           bool unknown_traversable) {
  const GridGeometry& g = grid.geometry();
  if (!g.contains(a) || grid.at(a) == CellState::Obstacle) return std::nullopt;

  if (g.width > 65535 || g.height > 65535) throw Error("grid too large for path search");
  SearchBuffers& buf = search_buffers();
  buf.prepare(g.size());
  const std::uint32_t gen = buf.generation;
  double* key = buf.key.data();
  PathSteps* steps = buf.steps.data();
  int* parent = buf.parent.data();
  std::uint32_t* seen = buf.seen.data();
  std::uint32_t* closed = buf.closed.data();
  const CellState* cells = grid.data().data();
  const int W = g.width, H = g.height;
  const auto passable = [&](std::size_t i) { return traversable(cells[i], unknown_traversable); };

  // Min-heap on f; among equal f the deeper node goes first. With a
  // consistent heuristic any tie order is optimal; this one expands less.
  struct Entry {
    double f;
    float neg_g;
    std::uint16_t row, col;
  };
  const auto later = [](const Entry& x, const Entry& y) { return x.f > y.f || (x.f == y.f && x.neg_g > y.neg_g); };
  thread_local std::vector<Entry> open;
  open.clear();
  const std::size_t ai = g.index(a);
  key[ai] = 0.0;
  steps[ai] = {};
  parent[ai] = -1;
  seen[ai] = gen;
  open.push_back({heuristic(a), 0.0f, static_cast<std::uint16_t>(a.row), static_cast<std::uint16_t>(a.col)});

  std::optional<std::size_t> found;
  while (!open.empty()) {
    std::pop_heap(open.begin(), open.end(), later);
    const Entry top = open.back();
    open.pop_back();
    const Cell c{top.row, top.col};
    const std::size_t idx = static_cast<std::size_t>(c.row) * W + c.col;
    if (closed[idx] == gen) continue;
    closed[idx] = gen;
    if (is_target(c)) {
      found = idx;
      break;
    }
    const bool interior = c.row > 0 && c.row < H - 1 && c.col > 0 && c.col < W - 1;
    const PathSteps here = steps[idx];
    // Same rule as move_allowed, on raw indices.
    for (const auto& d : kNeighbours8) {
      const int nr = c.row + d[0], nc = c.col + d[1];
      if (!interior && (nr < 0 || nr >= H || nc < 0 || nc >= W)) continue;
      const std::size_t ni = static_cast<std::size_t>(nr) * W + nc;
      if (closed[ni] == gen || !passable(ni)) continue;
      const bool diagonal = d[0] != 0 && d[1] != 0;
      if (diagonal && (!passable(static_cast<std::size_t>(nr) * W + c.col) ||
                       !passable(static_cast<std::size_t>(c.row) * W + nc)))
        continue;
      PathSteps st = here;
      if (diagonal) ++st.diagonal;
      else ++st.straight;
      const double nk = st.units();
      if (seen[ni] != gen || nk < key[ni]) {
        seen[ni] = gen;
        key[ni] = nk;
        steps[ni] = st;
        parent[ni] = static_cast<int>(idx);
        open.push_back({nk + heuristic(Cell{nr, nc}), static_cast<float>(-nk), static_cast<std::uint16_t>(nr),
                        static_cast<std::uint16_t>(nc)});
        std::push_heap(open.begin(), open.end(), later);
      }
    }
  }
  if (!found) return std::nullopt;

  Path path;
  path.steps = buf.steps[*found];
  path.cost_m = path.steps.meters(g.resolution);
  for (std::size_t idx = *found; idx != ai; idx = static_cast<std::size_t>(buf.parent[idx]))
    path.cells.push_back(g.cell_at(idx));
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

}  // namespace

std::optional<Path> dijkstra_to_any(const OccupancyGrid& grid, Cell a, const std::function<bool(Cell)>& is_target,
                                    bool unknown_traversable) {
  return search(grid, a, is_target, [](Cell) { return 0.0; }, unknown_traversable);
}

struct IncrementalPlanner::Buffers {
  struct Entry {
    std::int64_t k1, k2;
    std::uint32_t idx, version;
  };
  std::vector<std::int64_t> g, rhs;
  std::vector<std::uint32_t> stamp, version;
  std::vector<std::uint8_t> open;
  std::vector<Entry> heap;
  std::uint32_t generation = 0;

  void prepare(std::size_t n) {
    if (g.size() != n) {
      g.assign(n, 0);
      rhs.assign(n, 0);
      stamp.assign(n, 0);
      version.assign(n, 0);
      open.assign(n, 0);
      generation = 0;
    }
    if (++generation == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      generation = 1;
    }
    heap.clear();
  }
};

namespace {

// Fixed-point costs: exact sums keep the key comparisons consistent when a
// heuristic estimate ties the true distance, which is routine on grids.
constexpr std::int64_t kStraight = std::int64_t{1} << 30;
const std::int64_t kDiagonal = std::llround(std::numbers::sqrt2 * static_cast<double>(kStraight));
constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

// Buffers are pooled per thread; a planner borrows one for its lifetime.
std::vector<std::unique_ptr<IncrementalPlanner::Buffers>>& buffer_pool() {
  thread_local std::vector<std::unique_ptr<IncrementalPlanner::Buffers>> pool;
  return pool;
}

bool entry_later(const IncrementalPlanner::Buffers::Entry& a, const IncrementalPlanner::Buffers::Entry& b) {
  return a.k1 > b.k1 || (a.k1 == b.k1 && (a.k2 > b.k2 || (a.k2 == b.k2 && a.idx > b.idx)));
}

std::int64_t octile(const GridGeometry& g, std::size_t a, std::size_t b) {
  const Cell ca = g.cell_at(a), cb = g.cell_at(b);
  const int dr = std::abs(ca.row - cb.row), dc = std::abs(ca.col - cb.col);
  const int lo = std::min(dr, dc), hi = std::max(dr, dc);
  return (hi - lo) * kStraight + lo * kDiagonal;
}

}  // namespace

IncrementalPlanner::IncrementalPlanner(const OccupancyGrid& grid, Cell goal, bool unknown_traversable)
    : grid_(grid), goal_(grid.geometry().index(goal)), unknown_(unknown_traversable) {
  if (!grid.contains(goal)) throw Error("goal outside the grid");
  auto& pool = buffer_pool();
  if (pool.empty()) pool.push_back(std::make_unique<Buffers>());
  buf_ = pool.back().release();
  pool.pop_back();
  buf_->prepare(grid.geometry().size());
  set_rhs(goal_, 0.0);
  push(goal_);
}

IncrementalPlanner::~IncrementalPlanner() { buffer_pool().emplace_back(buf_); }

// Cells untouched in this generation read as g = rhs = infinity.
std::int64_t IncrementalPlanner::key_g(std::size_t i) const { return buf_->stamp[i] == buf_->generation ? buf_->g[i] : kInf; }
std::int64_t IncrementalPlanner::rhs(std::size_t i) const { return buf_->stamp[i] == buf_->generation ? buf_->rhs[i] : kInf; }

void IncrementalPlanner::set_g(std::size_t i, std::int64_t v) {
  if (buf_->stamp[i] != buf_->generation) {
    buf_->stamp[i] = buf_->generation;
    buf_->rhs[i] = kInf;
    buf_->open[i] = 0;
  }
  buf_->g[i] = v;
}

void IncrementalPlanner::set_rhs(std::size_t i, std::int64_t v) {
  if (buf_->stamp[i] != buf_->generation) {
    buf_->stamp[i] = buf_->generation;
    buf_->g[i] = kInf;
    buf_->open[i] = 0;
  }
  buf_->rhs[i] = v;
}

std::int64_t IncrementalPlanner::cost(std::size_t from, std::size_t to) const {
  const GridGeometry& g = grid_.geometry();
  const Cell a = g.cell_at(from), b = g.cell_at(to);
  if (!move_allowed(grid_, a, b, unknown_)) return kInf;
  return a.row != b.row && a.col != b.col ? kDiagonal : kStraight;
}

std::int64_t IncrementalPlanner::best_successor(std::size_t i) const {
  if (!traversable(grid_[i], unknown_)) return kInf;
  const GridGeometry& g = grid_.geometry();
  const Cell c = g.cell_at(i);
  std::int64_t best = kInf;
  for (const auto& d : kNeighbours8) {
    const Cell n{c.row + d[0], c.col + d[1]};
    if (!g.contains(n)) continue;
    const std::size_t ni = g.index(n);
    const std::int64_t gn = key_g(ni);
    if (gn == kInf) continue;
    const std::int64_t w = cost(i, ni);
    if (w != kInf) best = std::min(best, w + gn);
  }
  return best;
}

void IncrementalPlanner::push(std::size_t i) {
  const std::int64_t m = std::min(key_g(i), rhs(i));
  const std::int64_t k1 = last_start_ ? m + octile(grid_.geometry(), *last_start_, i) + km_ : m;
  buf_->open[i] = 1;
  buf_->heap.push_back({k1, m, static_cast<std::uint32_t>(i), ++buf_->version[i]});
  std::push_heap(buf_->heap.begin(), buf_->heap.end(), entry_later);
}

void IncrementalPlanner::update_vertex(std::size_t i) {
  if (i != goal_) set_rhs(i, best_successor(i));
  if (key_g(i) != rhs(i)) {
    push(i);
  } else if (buf_->stamp[i] == buf_->generation && buf_->open[i]) {
    buf_->open[i] = 0;
    ++buf_->version[i];
  }
}

void IncrementalPlanner::cell_changed(Cell c) {
  const GridGeometry& g = grid_.geometry();
  if (!g.contains(c)) return;
  // The cell's own edges and the diagonals cutting its corner all join
  // members of its 3x3 neighbourhood.
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      const Cell n{c.row + dr, c.col + dc};
      if (g.contains(n)) update_vertex(g.index(n));
    }
}

void IncrementalPlanner::compute(std::size_t start) {
  const GridGeometry& geo = grid_.geometry();
  auto& heap = buf_->heap;
  const auto key_of = [&](std::size_t i) {
    const std::int64_t m = std::min(key_g(i), rhs(i));
    return std::pair{m + octile(geo, start, i) + km_, m};
  };
  while (true) {
    // Drop stale heap entries.
    while (!heap.empty()) {
      const auto& top = heap.front();
      if (buf_->stamp[top.idx] == buf_->generation && buf_->open[top.idx] && buf_->version[top.idx] == top.version) break;
      std::pop_heap(heap.begin(), heap.end(), entry_later);
      heap.pop_back();
    }
    const auto start_key = key_of(start);
    if (heap.empty()) break;
    const auto top = heap.front();
    if (std::pair{top.k1, top.k2} >= start_key && rhs(start) == key_g(start)) break;
    std::pop_heap(heap.begin(), heap.end(), entry_later);
    heap.pop_back();
    const std::size_t u = top.idx;
    buf_->open[u] = 0;
    const auto k_new = key_of(u);
    if (std::pair{top.k1, top.k2} < k_new) {
      push(u);
      continue;
    }
    const Cell c = geo.cell_at(u);
    if (key_g(u) > rhs(u)) {
      set_g(u, rhs(u));
    } else {
      set_g(u, kInf);
      update_vertex(u);
    }
    for (const auto& d : kNeighbours8) {
      const Cell n{c.row + d[0], c.col + d[1]};
      if (geo.contains(n)) update_vertex(geo.index(n));
    }
  }
}

std::optional<Path> IncrementalPlanner::plan(Cell start_cell) {
  const GridGeometry& g = grid_.geometry();
  if (!g.contains(start_cell) || grid_.at(start_cell) == CellState::Obstacle) return std::nullopt;
  if (!traversable(grid_[goal_], unknown_) && g.index(start_cell) != goal_) return std::nullopt;
  const std::size_t start = g.index(start_cell);
  if (!last_start_) {
    last_start_ = start;
    // Keys pushed before the first plan lack the heuristic term; rebuild them.
    for (auto& e : buf_->heap) e.k1 += octile(g, start, e.idx);
    std::make_heap(buf_->heap.begin(), buf_->heap.end(), entry_later);
  } else if (*last_start_ != start) {
    km_ += octile(g, *last_start_, start);
    last_start_ = start;
  }
  if (start != goal_) compute(start);

  Path path;
  if (start == goal_) return path;
  // The start may itself sit on an untraversable cell (e.g. Unknown with
  // unknown cells blocked); its successors are scanned directly.
  std::size_t cur = start;
  for (std::size_t guard = 0; cur != goal_; ++guard) {
    if (guard > g.size()) return std::nullopt;
    const Cell c = g.cell_at(cur);
    std::int64_t best = kInf;
    std::size_t next = cur;
    for (const auto& d : kNeighbours8) {
      const Cell n{c.row + d[0], c.col + d[1]};
      if (!g.contains(n)) continue;
      const std::size_t ni = g.index(n);
      const std::int64_t w = cost(cur, ni), gn = key_g(ni);
      if (w == kInf || gn == kInf) continue;
      const std::int64_t v = w + gn;
      if (v < best) {
        best = v;
        next = ni;
      }
    }
    if (best == kInf) return std::nullopt;
    const Cell nc = g.cell_at(next);
    if (nc.row != c.row && nc.col != c.col) ++path.steps.diagonal;
    else ++path.steps.straight;
    path.cells.push_back(nc);
    cur = next;
  }
  path.cost_m = path.steps.meters(g.resolution);
  return path;
}

std::optional<Path> dijkstra(const OccupancyGrid& grid, Cell a, Cell b, bool unknown_traversable) {
  if (!grid.contains(b) || !grid.contains(a)) return std::nullopt;
  if (a != b && !traversable(grid.at(b), unknown_traversable)) return std::nullopt;
  // Octile distance never overestimates under 8-connectivity, so the search
  // stays exact while expanding far fewer cells than uniform-cost search.
  const auto octile = [b](Cell c) {
    const int dr = std::abs(c.row - b.row), dc = std::abs(c.col - b.col);
    const int lo = std::min(dr, dc), hi = std::max(dr, dc);
    return (hi - lo) + lo * std::numbers::sqrt2 - 1e-9;
  };
  return search(grid, a, [b](Cell c) { return c == b; }, octile, unknown_traversable);
}

}  // namespace alcon
