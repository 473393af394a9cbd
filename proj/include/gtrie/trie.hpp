#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gtrie/model.hpp"

namespace gtrie {

struct CapLimits {
    int depth_cap = 64;
    std::uint64_t node_cap = 10'000'000;
};

// Weighted counter N = alpha R + beta K + gamma S.
struct Weights {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 1.0;
};

struct StatCounters {
    std::uint64_t internal = 0;        // S
    std::uint64_t leaves = 0;          // L
    std::uint64_t key_externals = 0;   // K: labeled path held by exactly one labeling
    std::uint64_t empty_externals = 0; // R

    double weighted(const Weights& w) const {
        return w.alpha * static_cast<double>(empty_externals) +
               w.beta * static_cast<double>(key_externals) +
               w.gamma * static_cast<double>(internal);
    }
};

// An edge labeling of the infinite M-ary tree, queried lazily along the paths
// the construction actually visits.  A path is the sequence of child
// directions from the root; the labeling returns the letter on the last edge.
class Labeling {
  public:
    virtual ~Labeling() = default;
    virtual int letter_at(std::span<const std::uint8_t> edge_path) const = 0;
};

// Deterministic hash-based labeling: the letter on an edge is an inverse-CDF
// draw from a 64-bit mix of (master_seed, key_index, path bytes), so repeated
// queries agree and distinct tries can be rebuilt from seeds alone.
class SeededLabeling final : public Labeling {
  public:
    SeededLabeling(std::uint64_t master_seed, std::uint32_t key_index,
                   std::span<const double> p);
    int letter_at(std::span<const std::uint8_t> edge_path) const override;

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint32_t key_index() const { return key_index_; }

  private:
    std::uint64_t master_seed_;
    std::uint32_t key_index_;
    std::vector<double> cumulative_;
};

std::vector<SeededLabeling> make_seeded_labelings(const ModelParams& params,
                                                  std::uint32_t n,
                                                  std::uint64_t master_seed);

int label_at(const Labeling& labeling, std::span<const std::uint8_t> edge_path);

// The G-trie: a labeled path is an internal node iff at least two labelings
// carry it.  Children of an internal node are indexed by the pair
// (direction i, letter j) flattened to i*A + j; slots record how many
// labelings match, so externals split into key (multiplicity 1) and empty
// (multiplicity 0) nodes.
class GTrie {
  public:
    struct Node {
        std::uint32_t multiplicity = 0;
        std::vector<std::uint32_t> slot_multiplicity;    // M*A entries
        std::vector<std::unique_ptr<Node>> slot_child;   // null where external
    };

    int M = 1;
    int A = 2;
    std::uint64_t n_keys = 0;
    std::uint64_t internal_count = 0;
    std::unique_ptr<Node> root;  // null when S = 0

    bool empty() const { return root == nullptr; }
};

GTrie build_gtrie(const ModelParams& params, std::span<const Labeling* const> labelings,
                  CapLimits caps = {});
GTrie build_gtrie(const ModelParams& params, std::span<const SeededLabeling> labelings,
                  CapLimits caps = {});

// S plus the leaf/external classification.  When the trie is empty the root
// slot itself is external: a key external for n = 1, an empty external for
// n = 0, matching the recurrence initial conditions.
StatCounters count_stats(const GTrie& trie);

// Breadth-first oracle straight from the node-set definition: count labeled
// paths matched by at least two labelings, pruning once multiplicity < 2.
std::uint64_t size_by_definition(const ModelParams& params,
                                 std::span<const Labeling* const> labelings,
                                 int depth_cap = CapLimits{}.depth_cap);
std::uint64_t size_by_definition(const ModelParams& params,
                                 std::span<const SeededLabeling> labelings,
                                 int depth_cap = CapLimits{}.depth_cap);

// DOT digraph with internal nodes as circles and external slots as boxes,
// edges labeled "(direction, letter)".
std::string export_dot(const GTrie& trie);

}  // namespace gtrie
