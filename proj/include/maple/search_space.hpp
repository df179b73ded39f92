#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace maple {

// Cell-based search space: a 4-node densely connected DAG whose 6 edges each
// carry one of 5 operations, instantiated at 3 channel widths.

enum class OpKind : std::uint8_t { None = 0, Skip, Conv1x1, Conv3x3, AvgPool3x3 };

inline constexpr int kNumOpKinds = 5;
inline constexpr std::array<int, 3> kChannelWidths{16, 32, 64};
inline constexpr int kNumWorkloads = kNumOpKinds * 3;  // 15
inline constexpr int kNumEdges = 6;
inline constexpr std::uint32_t kNumArchitectures = 15625;  // 5^6

// Edge e connects node kEdgeTail[e] -> kEdgeHead[e]; this order is canonical
// and defines the base-5 positional code of an architecture id.
inline constexpr std::array<int, kNumEdges> kEdgeTail{0, 0, 0, 1, 1, 2};
inline constexpr std::array<int, kNumEdges> kEdgeHead{1, 2, 3, 2, 3, 3};

std::string_view op_kind_name(OpKind kind);
bool op_is_conv(OpKind kind);

struct OperatorWorkload {
    OpKind kind = OpKind::None;
    int width = kChannelWidths[0];

    bool operator==(const OperatorWorkload&) const = default;
};

// The 15 canonical workloads, kind-major then width-minor.
const std::array<OperatorWorkload, kNumWorkloads>& operator_workloads();
int workload_index(OpKind kind, int width);
std::string workload_name(const OperatorWorkload& w);
OperatorWorkload workload_from_name(std::string_view name);

using ArchId = std::uint32_t;

std::vector<ArchId> enumerate_architectures();

// Base-5 digits of the id, one per edge in canonical order.
std::array<OpKind, kNumEdges> edge_ops(ArchId arch);
ArchId arch_from_edge_ops(const std::array<OpKind, kNumEdges>& ops);

// One-hot operations matrix, 6 rows (edges) x 5 columns (op kinds), row-major.
struct ArchEncoding {
    std::array<std::uint8_t, kNumEdges * kNumOpKinds> bits{};

    std::uint8_t at(int edge, int kind) const { return bits[edge * kNumOpKinds + kind]; }
    std::string to_string() const;
    static ArchEncoding from_string(std::string_view s);

    bool operator==(const ArchEncoding&) const = default;
};

ArchEncoding encode(ArchId arch);
ArchId decode(const ArchEncoding& enc);

// Macro skeleton the cell is repeated into: stem conv3x3, three stages of K
// cells at widths 16/32/64, stride-2 average pool + conv1x1 between stages,
// global average pool + linear head.
struct NetworkSkeleton {
    int input_height = 32;
    int input_width = 32;
    int input_channels = 3;
    std::array<int, 3> stage_widths{16, 32, 64};
    int cells_per_stage = 1;
    int num_classes = 10;
};

// Multiply-accumulates doubled, summed over every convolution (and the head
// linear map) in the instantiated network. Pools, skips and None count 0.
std::uint64_t flops(ArchId arch, const NetworkSkeleton& skel);

// Cell-only FLOP contribution (excludes stem/reduction/head).
std::uint64_t cell_flops(ArchId arch, const NetworkSkeleton& skel);

// Number of edge pairs (e1, e2) with head(e1) == tail(e2) where both carry a
// convolution; drives the interaction term of the simulated devices.
int adjacent_conv_pairs(ArchId arch);

}  // namespace maple
