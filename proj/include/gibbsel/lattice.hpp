#pragma once

// Lattice geometry, the G4/G8 neighborhood graphs and connected components
// of the graph induced on a colored field.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gibbsel/error.hpp"

namespace gibbsel {

struct LatticeShape {
    int height = 0;
    int width = 0;

    constexpr std::size_t sites() const noexcept
    {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    }
    constexpr bool valid() const noexcept { return height >= 1 && width >= 1; }
    constexpr int index(int row, int col) const noexcept { return row * width + col; }

    friend constexpr bool operator==(const LatticeShape&, const LatticeShape&) = default;
};

enum class GraphKind { G4, G8 };

inline std::string_view to_string(GraphKind kind) { return kind == GraphKind::G4 ? "G4" : "G8"; }

inline GraphKind parse_graph_kind(std::string_view s)
{
    if (s == "G4" || s == "g4") return GraphKind::G4;
    if (s == "G8" || s == "g8") return GraphKind::G8;
    throw InvalidArgument("unknown graph kind '" + std::string(s) + "' (expected G4 or G8)");
}

struct Edge {
    int a;  // a < b
    int b;
    friend constexpr bool operator==(const Edge&, const Edge&) = default;
};

/// Closed-form edge counts with free boundary.
constexpr std::size_t g4_edge_count(LatticeShape s) noexcept
{
    const auto h = static_cast<std::size_t>(s.height), w = static_cast<std::size_t>(s.width);
    return h * (w - 1) + w * (h - 1);
}

constexpr std::size_t g8_edge_count(LatticeShape s) noexcept
{
    const auto h = static_cast<std::size_t>(s.height), w = static_cast<std::size_t>(s.width);
    return g4_edge_count(s) + 2 * (h - 1) * (w - 1);
}

/// Immutable neighborhood graph over the sites of a lattice. Copies share the
/// underlying storage.
class NeighborhoodGraph {
public:
    NeighborhoodGraph(LatticeShape shape, GraphKind kind)
    {
        if (!shape.valid())
            throw InvalidArgument("lattice shape must be at least 1x1, got " +
                                  std::to_string(shape.height) + "x" + std::to_string(shape.width));
        auto data = std::make_shared<Data>();
        data->shape = shape;
        data->kind = kind;
        const int h = shape.height, w = shape.width;
        data->edges.reserve(kind == GraphKind::G4 ? g4_edge_count(shape) : g8_edge_count(shape));
        // Emitted per site in increasing neighbor index: right, down-left,
        // down, down-right. This is lexicographic order on (a, b).
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const int i = shape.index(r, c);
                if (c + 1 < w) data->edges.push_back({i, i + 1});
                if (r + 1 < h) {
                    if (kind == GraphKind::G8 && c > 0) data->edges.push_back({i, i + w - 1});
                    data->edges.push_back({i, i + w});
                    if (kind == GraphKind::G8 && c + 1 < w) data->edges.push_back({i, i + w + 1});
                }
            }
        }
        const std::size_t n = shape.sites();
        data->offsets.assign(n + 1, 0);
        for (const Edge& e : data->edges) {
            ++data->offsets[static_cast<std::size_t>(e.a) + 1];
            ++data->offsets[static_cast<std::size_t>(e.b) + 1];
        }
        for (std::size_t i = 0; i < n; ++i) data->offsets[i + 1] += data->offsets[i];
        data->neighbors.resize(2 * data->edges.size());
        std::vector<std::size_t> fill(data->offsets.begin(), data->offsets.end() - 1);
        for (const Edge& e : data->edges) {
            data->neighbors[fill[static_cast<std::size_t>(e.a)]++] = e.b;
            data->neighbors[fill[static_cast<std::size_t>(e.b)]++] = e.a;
        }
        data_ = std::move(data);
    }

    LatticeShape shape() const noexcept { return data_->shape; }
    GraphKind kind() const noexcept { return data_->kind; }
    std::size_t sites() const noexcept { return data_->shape.sites(); }
    std::span<const Edge> edges() const noexcept { return data_->edges; }

    std::span<const int> neighbors(std::size_t site) const noexcept
    {
        const auto* base = data_->neighbors.data();
        return {base + data_->offsets[site], base + data_->offsets[site + 1]};
    }

private:
    struct Data {
        LatticeShape shape;
        GraphKind kind = GraphKind::G4;
        std::vector<Edge> edges;
        std::vector<std::size_t> offsets;
        std::vector<int> neighbors;
    };
    std::shared_ptr<const Data> data_;
};

inline NeighborhoodGraph build_graph(LatticeShape shape, GraphKind kind)
{
    return NeighborhoodGraph(shape, kind);
}

/// K-color configuration on a lattice, row-major from the top-left corner.
class DiscreteField {
public:
    DiscreteField(LatticeShape shape, int colors, std::vector<int> values)
        : shape_(shape), colors_(colors), values_(std::move(values))
    {
        if (!shape.valid()) throw InvalidArgument("field shape must be at least 1x1");
        if (colors < 2) throw InvalidArgument("a field needs at least 2 colors");
        if (values_.size() != shape.sites())
            throw InvalidArgument("field has " + std::to_string(values_.size()) + " values for " +
                                  std::to_string(shape.sites()) + " sites");
        for (int v : values_)
            if (v < 0 || v >= colors)
                throw InvalidArgument("color " + std::to_string(v) + " outside {0, ..., " +
                                      std::to_string(colors - 1) + "}");
    }

    /// Constant field.
    DiscreteField(LatticeShape shape, int colors, int value = 0)
        : DiscreteField(shape, colors, std::vector<int>(shape.valid() ? shape.sites() : 0, value))
    {
    }

    LatticeShape shape() const noexcept { return shape_; }
    int colors() const noexcept { return colors_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const int> values() const noexcept { return values_; }
    int operator[](std::size_t i) const noexcept { return values_[i]; }
    int at(int row, int col) const { return values_.at(static_cast<std::size_t>(shape_.index(row, col))); }

    /// Unchecked write; callers keep values in range.
    void set(std::size_t i, int color) noexcept { values_[i] = color; }

    friend bool operator==(const DiscreteField&, const DiscreteField&) = default;

private:
    LatticeShape shape_;
    int colors_;
    std::vector<int> values_;
};

/// Connected components of an induced graph. Labels are numbered in order of
/// first appearance in a row-major scan.
struct ComponentPartition {
    std::vector<int> labels;
    std::vector<int> sizes;

    std::size_t count() const noexcept { return sizes.size(); }
    int largest() const noexcept { return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end()); }
};

namespace detail {

inline void check_same_shape(const NeighborhoodGraph& graph, const DiscreteField& field)
{
    if (graph.shape() != field.shape())
        throw InvalidArgument("graph is " + std::to_string(graph.shape().height) + "x" +
                              std::to_string(graph.shape().width) + " but field is " +
                              std::to_string(field.shape().height) + "x" +
                              std::to_string(field.shape().width));
}

}  // namespace detail

/// Components of the graph induced by `graph` on `field`: i and j are linked
/// when they are graph neighbors with the same color. Iterative BFS, linear in
/// sites plus edges.
inline ComponentPartition induced_components(const NeighborhoodGraph& graph, const DiscreteField& field)
{
    detail::check_same_shape(graph, field);
    const std::size_t n = field.size();
    ComponentPartition out;
    out.labels.assign(n, -1);
    std::vector<int> queue;
    queue.reserve(n);
    for (std::size_t start = 0; start < n; ++start) {
        if (out.labels[start] >= 0) continue;
        const int label = static_cast<int>(out.sizes.size());
        const int color = field[start];
        queue.clear();
        queue.push_back(static_cast<int>(start));
        out.labels[start] = label;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            for (int nb : graph.neighbors(static_cast<std::size_t>(queue[head]))) {
                const auto j = static_cast<std::size_t>(nb);
                if (out.labels[j] < 0 && field[j] == color) {
                    out.labels[j] = label;
                    queue.push_back(nb);
                }
            }
        }
        out.sizes.push_back(static_cast<int>(queue.size()));
    }
    return out;
}

/// Number of edges of `graph` whose endpoints share a color (statistic R).
inline std::size_t monochrome_edge_count(const NeighborhoodGraph& graph, const DiscreteField& field)
{
    detail::check_same_shape(graph, field);
    std::size_t count = 0;
    for (const Edge& e : graph.edges())
        count += field[static_cast<std::size_t>(e.a)] == field[static_cast<std::size_t>(e.b)];
    return count;
}

}  // namespace gibbsel
