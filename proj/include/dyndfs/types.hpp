#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace dyndfs {

// Vertex ids are dense small integers. Id 0 is reserved for the pseudo root,
// which is adjacent to every live vertex of the graph.
using VertexId = std::int32_t;

inline constexpr VertexId kPseudoRoot = 0;
inline constexpr VertexId kNoVertex = -1;

// Unordered pair of endpoints. Normalized so that u <= v.
struct Edge {
    VertexId u = kNoVertex;
    VertexId v = kNoVertex;

    Edge() = default;
    Edge(VertexId a, VertexId b) : u(a < b ? a : b), v(a < b ? b : a) {}

    friend bool operator==(const Edge& a, const Edge& b) = default;
    friend auto operator<=>(const Edge& a, const Edge& b) = default;
};

// Precondition violations callers can act on (bad input, infeasible update).
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Broken internal invariant. Carries enough context to replay the failure.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace dyndfs

template <>
struct std::hash<dyndfs::Edge> {
    size_t operator()(const dyndfs::Edge& e) const noexcept {
        return std::hash<std::int64_t>()((std::int64_t(e.u) << 32) ^ std::int64_t(e.v));
    }
};
