#include "gcnlab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gcnlab {

namespace {

constexpr int kKarateNodes = 34;

constexpr std::pair<int, int> kKarateEdges[] = {
    {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},   {0, 8},   {0, 10},
    {0, 11},  {0, 12},  {0, 13},  {0, 17},  {0, 19},  {0, 21},  {0, 31},  {1, 2},   {1, 3},
    {1, 7},   {1, 13},  {1, 17},  {1, 19},  {1, 21},  {1, 30},  {2, 3},   {2, 7},   {2, 8},
    {2, 9},   {2, 13},  {2, 27},  {2, 28},  {2, 32},  {3, 7},   {3, 12},  {3, 13},  {4, 6},
    {4, 10},  {5, 6},   {5, 10},  {5, 16},  {6, 16},  {8, 30},  {8, 32},  {8, 33},  {9, 33},
    {13, 33}, {14, 32}, {14, 33}, {15, 32}, {15, 33}, {18, 32}, {18, 33}, {19, 33}, {20, 32},
    {20, 33}, {22, 32}, {22, 33}, {23, 25}, {23, 27}, {23, 29}, {23, 32}, {23, 33}, {24, 25},
    {24, 27}, {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33}, {28, 31}, {28, 33}, {29, 32},
    {29, 33}, {30, 32}, {30, 33}, {31, 32}, {31, 33}, {32, 33},
};

// Four-community modularity partition; class ids ordered by each
// community's lowest-index member.
constexpr int kKarateLabels[kKarateNodes] = {
    0, 0, 0, 0, 1, 1, 1, 0, 2, 2, 1, 0, 0, 0, 2, 2, 1,
    0, 2, 0, 2, 0, 2, 2, 3, 3, 2, 2, 3, 2, 2, 3, 2, 2,
};

std::string shortest_decimal(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

struct TsvReader {
    std::filesystem::path path;
    std::ifstream in;
    int line_no = 0;

    explicit TsvReader(const std::filesystem::path& p) : path(p), in(p) {
        if (!in) {
            throw std::runtime_error("load_bundle: missing or unreadable file " + p.string());
        }
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error("load_bundle: " + path.filename().string() + " line " +
                                 std::to_string(line_no) + ": " + what);
    }

    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            fields.clear();
            size_t start = 0;
            while (true) {
                const size_t tab = line.find('\t', start);
                if (tab == std::string::npos) {
                    fields.push_back(line.substr(start));
                    break;
                }
                fields.push_back(line.substr(start, tab - start));
                start = tab + 1;
            }
            return true;
        }
        return false;
    }

    int to_int(const std::string& s) const {
        int v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) fail("expected an integer, got '" + s + "'");
        return v;
    }

    double to_double(const std::string& s) const {
        try {
            size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) fail("expected a number, got '" + s + "'");
            return v;
        } catch (const std::exception&) {
            fail("expected a number, got '" + s + "'");
        }
    }
};

void normalize_feature_rows(Tensor& x) {
    for (int i = 0; i < x.rows(); ++i) {
        double sum = 0.0;
        for (int j = 0; j < x.cols(); ++j) sum += x(i, j);
        if (sum == 0.0) continue;
        // rows that already sum to 1 within rounding stay untouched, so a
        // written-then-reloaded bundle reproduces its values exactly
        if (std::abs(sum - 1.0) <= 16.0 * std::numeric_limits<double>::epsilon()) continue;
        for (int j = 0; j < x.cols(); ++j) x(i, j) /= sum;
    }
}

}  // namespace

Dataset load_karate() {
    Dataset d;
    d.name = "karate";
    std::vector<std::pair<int, int>> edges(std::begin(kKarateEdges), std::end(kKarateEdges));
    d.graph = build_graph(kKarateNodes, edges);
    d.features = Tensor::identity(kKarateNodes);
    d.labels.assign(std::begin(kKarateLabels), std::end(kKarateLabels));
    d.num_classes = 4;
    d.train_mask.assign(kKarateNodes, false);
    d.val_mask.assign(kKarateNodes, false);
    d.test_mask.assign(kKarateNodes, false);
    for (int c = 0; c < d.num_classes; ++c) {
        int lo = -1, hi = -1;
        for (int i = 0; i < kKarateNodes; ++i) {
            if (d.labels[i] != c) continue;
            if (lo < 0) lo = i;
            hi = i;
        }
        d.train_mask[lo] = d.train_mask[hi] = true;
    }
    for (int i = 0; i < kKarateNodes; ++i) {
        if (!d.train_mask[i]) d.test_mask[i] = true;
    }
    d.validate();
    return d;
}

Dataset load_bundle(const std::filesystem::path& dir) {
    Dataset d;
    d.name = dir.filename().string();

    int n = 0, fdim = 0, classes = 0;
    {
        TsvReader meta(dir / "meta.tsv");
        std::vector<std::string> f;
        if (!meta.next(f)) meta.fail("empty file");
        if (f.size() != 3) meta.fail("expected 3 fields: n, feature dim, class count");
        n = meta.to_int(f[0]);
        fdim = meta.to_int(f[1]);
        classes = meta.to_int(f[2]);
        if (n <= 0 || fdim <= 0 || classes <= 0) meta.fail("counts must be positive");
    }
    d.num_classes = classes;

    auto check_node = [&](const TsvReader& r, int id) {
        if (id < 0 || id >= n) {
            r.fail("node id " + std::to_string(id) + " outside [0, " + std::to_string(n) + ")");
        }
    };

    {
        TsvReader er(dir / "edges.tsv");
        std::vector<std::pair<int, int>> edges;
        std::vector<std::string> f;
        while (er.next(f)) {
            if (f.size() != 2) er.fail("expected 2 fields");
            const int a = er.to_int(f[0]), b = er.to_int(f[1]);
            check_node(er, a);
            check_node(er, b);
            if (a == b) er.fail("self-loop " + std::to_string(a));
            edges.emplace_back(a, b);
        }
        d.graph = build_graph(n, edges);
    }

    d.features = Tensor(n, fdim);
    {
        TsvReader fr(dir / "features.tsv");
        std::vector<std::string> f;
        while (fr.next(f)) {
            if (f.size() != 3) fr.fail("expected 3 fields");
            const int node = fr.to_int(f[0]), idx = fr.to_int(f[1]);
            check_node(fr, node);
            if (idx < 0 || idx >= fdim) fr.fail("feature index out of range");
            d.features(node, idx) = fr.to_double(f[2]);
        }
    }
    normalize_feature_rows(d.features);

    d.labels.assign(n, kUnlabeled);
    {
        TsvReader lr(dir / "labels.tsv");
        std::vector<std::string> f;
        std::vector<bool> seen(classes, false);
        while (lr.next(f)) {
            if (f.size() != 2) lr.fail("expected 2 fields");
            const int node = lr.to_int(f[0]), cls = lr.to_int(f[1]);
            check_node(lr, node);
            if (cls < 0 || cls >= classes) lr.fail("class id out of range");
            d.labels[node] = cls;
            seen[cls] = true;
        }
        for (int c = 0; c < classes; ++c) {
            if (!seen[c]) lr.fail("class id " + std::to_string(c) + " never appears (gap)");
        }
    }

    d.train_mask.assign(n, false);
    d.val_mask.assign(n, false);
    d.test_mask.assign(n, false);
    {
        TsvReader sr(dir / "splits.tsv");
        std::vector<std::string> f;
        while (sr.next(f)) {
            if (f.size() != 2) sr.fail("expected 2 fields");
            const int node = sr.to_int(f[0]);
            check_node(sr, node);
            if (d.labels[node] == kUnlabeled) {
                sr.fail("split node " + std::to_string(node) + " has no label");
            }
            if (f[1] == "train") d.train_mask[node] = true;
            else if (f[1] == "val") d.val_mask[node] = true;
            else if (f[1] == "test") d.test_mask[node] = true;
            else sr.fail("unknown split '" + f[1] + "'");
        }
    }

    d.validate();

    // conventional public splits label about 5.2% / 3.6% / 0.3% of nodes;
    // warn (only) when the bundle's rate is far off
    const double train_count = std::count(d.train_mask.begin(), d.train_mask.end(), true);
    const double rate = train_count / n;
    const double expected = double(20 * classes) / n;
    if (std::abs(rate - expected) > 0.1 * expected) {
        std::cerr << "warning: " << d.name << ": label rate " << rate
                  << " differs from the conventional 20-per-class split (" << expected << ")\n";
    }
    return d;
}

void write_bundle(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary);  // binary keeps LF endings
        if (!out) throw std::runtime_error("write_bundle: cannot open " + (dir / name).string());
        return out;
    };

    {
        auto out = open("meta.tsv");
        out << data.n() << '\t' << data.feature_dim() << '\t' << data.num_classes << '\n';
    }
    {
        auto out = open("edges.tsv");
        for (const auto& [i, j] : data.graph.edges) out << i << '\t' << j << '\n';
    }
    {
        auto out = open("features.tsv");
        for (int i = 0; i < data.n(); ++i)
            for (int j = 0; j < data.feature_dim(); ++j)
                if (data.features(i, j) != 0.0)
                    out << i << '\t' << j << '\t' << shortest_decimal(data.features(i, j)) << '\n';
    }
    {
        auto out = open("labels.tsv");
        for (int i = 0; i < data.n(); ++i)
            if (data.labels[i] != kUnlabeled) out << i << '\t' << data.labels[i] << '\n';
    }
    {
        auto out = open("splits.tsv");
        for (int i = 0; i < data.n(); ++i) {
            if (data.train_mask[i]) out << i << "\ttrain\n";
            else if (data.val_mask[i]) out << i << "\tval\n";
            else if (data.test_mask[i]) out << i << "\ttest\n";
        }
    }
}

}  // namespace gcnlab
