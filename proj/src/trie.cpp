#include "gtrie/trie.hpp"

#include <deque>
#include <sstream>
#include <stdexcept>

#include "gtrie/errors.hpp"

namespace gtrie {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

SeededLabeling::SeededLabeling(std::uint64_t master_seed, std::uint32_t key_index,
                               std::span<const double> p)
    : master_seed_(master_seed), key_index_(key_index) {
    cumulative_.reserve(p.size());
    double acc = 0.0;
    for (double x : p) cumulative_.push_back(acc += x);
}

int SeededLabeling::letter_at(std::span<const std::uint8_t> edge_path) const {
    std::uint64_t h = splitmix64(master_seed_);
    h = splitmix64(h ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(key_index_) + 1)));
    for (std::uint8_t b : edge_path) h = splitmix64(h ^ (b + 1ULL));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    for (std::size_t j = 0; j + 1 < cumulative_.size(); ++j)
        if (u < cumulative_[j]) return static_cast<int>(j);
    return static_cast<int>(cumulative_.size()) - 1;
}

std::vector<SeededLabeling> make_seeded_labelings(const ModelParams& params,
                                                  std::uint32_t n,
                                                  std::uint64_t master_seed) {
    std::vector<SeededLabeling> keys;
    keys.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) keys.emplace_back(master_seed, i, params.p);
    return keys;
}

int label_at(const Labeling& labeling, std::span<const std::uint8_t> edge_path) {
    if (edge_path.empty()) throw std::logic_error("an edge path has at least one direction");
    return labeling.letter_at(edge_path);
}

namespace {

struct Builder {
    const ModelParams& params;
    std::span<const Labeling* const> keys;
    CapLimits caps;
    std::uint64_t internal_count = 0;
    std::vector<std::uint8_t> path{};

    std::unique_ptr<GTrie::Node> build(std::vector<std::uint32_t> members, int depth) {
        if (depth > caps.depth_cap)
            throw CapExceeded(CapExceeded::Kind::Depth, "G-trie construction exceeded depth_cap");
        if (++internal_count > caps.node_cap)
            throw CapExceeded(CapExceeded::Kind::Nodes, "G-trie construction exceeded node_cap");
        const int M = params.M;
        const int A = params.alphabet_size();
        auto node = std::make_unique<GTrie::Node>();
        node->multiplicity = static_cast<std::uint32_t>(members.size());
        node->slot_multiplicity.assign(static_cast<std::size_t>(M) * A, 0);
        node->slot_child.resize(static_cast<std::size_t>(M) * A);
        std::vector<std::vector<std::uint32_t>> partition(static_cast<std::size_t>(A));
        for (int dir = 0; dir < M; ++dir) {
            for (auto& bucket : partition) bucket.clear();
            path.push_back(static_cast<std::uint8_t>(dir));
            for (std::uint32_t key : members) {
                const int letter = keys[key]->letter_at(path);
                if (letter < 0 || letter >= A)
                    throw std::logic_error("labeling produced a letter outside the alphabet");
                partition[static_cast<std::size_t>(letter)].push_back(key);
            }
            for (int letter = 0; letter < A; ++letter) {
                const auto slot = static_cast<std::size_t>(dir) * A + letter;
                auto& bucket = partition[static_cast<std::size_t>(letter)];
                node->slot_multiplicity[slot] = static_cast<std::uint32_t>(bucket.size());
                if (bucket.size() >= 2) {
                    // path currently ends with `dir`, which is the child's prefix
                    node->slot_child[slot] = build(std::move(bucket), depth + 1);
                    bucket = {};
                }
            }
            path.pop_back();
        }
        return node;
    }
};

}  // namespace

GTrie build_gtrie(const ModelParams& params, std::span<const Labeling* const> labelings,
                  CapLimits caps) {
    GTrie trie;
    trie.M = params.M;
    trie.A = params.alphabet_size();
    trie.n_keys = labelings.size();
    if (labelings.size() < 2) return trie;

    Builder builder{params, labelings, caps};
    std::vector<std::uint32_t> all(labelings.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
    trie.root = builder.build(std::move(all), 0);
    trie.internal_count = builder.internal_count;
    return trie;
}

GTrie build_gtrie(const ModelParams& params, std::span<const SeededLabeling> labelings,
                  CapLimits caps) {
    std::vector<const Labeling*> ptrs;
    ptrs.reserve(labelings.size());
    for (const auto& key : labelings) ptrs.push_back(&key);
    return build_gtrie(params, ptrs, caps);
}

StatCounters count_stats(const GTrie& trie) {
    StatCounters counters;
    if (trie.empty()) {
        if (trie.n_keys == 1)
            counters.key_externals = 1;
        else if (trie.n_keys == 0)
            counters.empty_externals = 1;
        return counters;
    }
    std::deque<const GTrie::Node*> queue{trie.root.get()};
    while (!queue.empty()) {
        const GTrie::Node* node = queue.front();
        queue.pop_front();
        ++counters.internal;
        bool leaf = true;
        for (std::size_t slot = 0; slot < node->slot_child.size(); ++slot) {
            if (node->slot_child[slot]) {
                leaf = false;
                queue.push_back(node->slot_child[slot].get());
            } else if (node->slot_multiplicity[slot] == 1) {
                ++counters.key_externals;
            } else {
                ++counters.empty_externals;
            }
        }
        if (leaf) ++counters.leaves;
    }
    return counters;
}

std::uint64_t size_by_definition(const ModelParams& params,
                                 std::span<const Labeling* const> labelings,
                                 int depth_cap) {
    if (labelings.size() < 2) return 0;
    const int M = params.M;
    const int A = params.alphabet_size();

    struct Item {
        std::vector<std::uint8_t> path{};
        std::vector<std::uint32_t> members;
    };
    std::uint64_t count = 0;
    std::deque<Item> frontier;
    {
        Item root;
        for (std::size_t i = 0; i < labelings.size(); ++i)
            root.members.push_back(static_cast<std::uint32_t>(i));
        frontier.push_back(std::move(root));
    }
    while (!frontier.empty()) {
        Item item = std::move(frontier.front());
        frontier.pop_front();
        ++count;  // every enqueued labeled path has multiplicity >= 2
        if (static_cast<int>(item.path.size()) >= depth_cap) {
            // children would exceed the cap; only an issue if any child is alive
            bool alive = false;
            std::vector<std::uint8_t> probe = item.path;
            probe.push_back(0);
            for (int dir = 0; dir < M && !alive; ++dir) {
                probe.back() = static_cast<std::uint8_t>(dir);
                std::vector<int> per_letter(static_cast<std::size_t>(A), 0);
                for (std::uint32_t key : item.members)
                    ++per_letter[static_cast<std::size_t>(labelings[key]->letter_at(probe))];
                for (int c : per_letter) alive = alive || c >= 2;
            }
            if (alive)
                throw CapExceeded(CapExceeded::Kind::Depth, "size oracle exceeded depth_cap");
            continue;
        }
        std::vector<std::uint8_t> child_path = item.path;
        child_path.push_back(0);
        for (int dir = 0; dir < M; ++dir) {
            child_path.back() = static_cast<std::uint8_t>(dir);
            std::vector<std::vector<std::uint32_t>> buckets(static_cast<std::size_t>(A));
            for (std::uint32_t key : item.members)
                buckets[static_cast<std::size_t>(labelings[key]->letter_at(child_path))]
                    .push_back(key);
            for (auto& bucket : buckets) {
                if (bucket.size() < 2) continue;
                Item child;
                child.path = child_path;
                child.members = std::move(bucket);
                frontier.push_back(std::move(child));
            }
        }
    }
    return count;
}

std::uint64_t size_by_definition(const ModelParams& params,
                                 std::span<const SeededLabeling> labelings, int depth_cap) {
    std::vector<const Labeling*> ptrs;
    ptrs.reserve(labelings.size());
    for (const auto& key : labelings) ptrs.push_back(&key);
    return size_by_definition(params, ptrs, depth_cap);
}

std::string export_dot(const GTrie& trie) {
    std::ostringstream os;
    os << "digraph gtrie {\n";
    if (!trie.empty()) {
        os << "  node [shape=circle];\n";
        std::uint64_t next_id = 0;
        std::uint64_t next_ext = 0;
        struct Entry {
            const GTrie::Node* node;
            std::uint64_t id;
        };
        std::deque<Entry> queue{{trie.root.get(), next_id++}};
        os << "  n0 [shape=circle, label=\"" << trie.root->multiplicity << "\"];\n";
        while (!queue.empty()) {
            auto [node, id] = queue.front();
            queue.pop_front();
            for (std::size_t slot = 0; slot < node->slot_child.size(); ++slot) {
                const int dir = static_cast<int>(slot) / trie.A;
                const int letter = static_cast<int>(slot) % trie.A;
                if (node->slot_child[slot]) {
                    const std::uint64_t child = next_id++;
                    os << "  n" << child << " [shape=circle, label=\""
                       << node->slot_child[slot]->multiplicity << "\"];\n";
                    os << "  n" << id << " -> n" << child << " [label=\"(" << dir << ","
                       << letter << ")\"];\n";
                    queue.push_back({node->slot_child[slot].get(), child});
                } else {
                    const std::uint64_t ext = next_ext++;
                    const char* tag = node->slot_multiplicity[slot] == 1 ? "key" : "empty";
                    os << "  e" << ext << " [shape=box, label=\"" << tag << "\"];\n";
                    os << "  n" << id << " -> e" << ext << " [label=\"(" << dir << ","
                       << letter << ")\"];\n";
                }
            }
        }
    }
    os << "}\n";
    return os.str();
}

}  // namespace gtrie
