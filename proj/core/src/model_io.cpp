// Model file layout (text, '\n' line endings):
//
//   posture-forest <format version>
//   n_trees <n>
//   max_depth <n|none>
//   min_leaf <n>
//   mtry <n>
//   seed <n>
//   bootstrap <0|1>
//   meta <device_set> <balance> <seed>
//   classes lying sitting
//   features <p> <name>...
//   tree <index> <node count>
//   <feature> <threshold> <left> <right> <count lying> <count sitting>   (one line per node, preorder)
//   ...
//   end
//
// Thresholds are written in shortest round-trip form.

#include <charconv>
#include <sstream>
#include <string>

#include "posture/errors.hpp"
#include "posture/forest.hpp"

namespace posture {
namespace {

using Kind = ParseError::Kind;

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::istringstream line(std::string_view expected_key) {
        std::string text;
        if (!std::getline(in_, text)) fail("unexpected end of model file");
        ++line_no_;
        std::istringstream ss(text);
        std::string key;
        ss >> key;
        if (key != expected_key) fail("expected '" + std::string(expected_key) + "', found '" + key + "'");
        return ss;
    }

    std::string raw_line() {
        std::string text;
        if (!std::getline(in_, text)) fail("unexpected end of model file");
        ++line_no_;
        return text;
    }

    template <typename T>
    T read(std::istringstream& ss, const char* what) {
        T v{};
        if (!(ss >> v)) fail(std::string("cannot read ") + what);
        return v;
    }

    double read_double(std::string_view token, const char* what) {
        double v = 0.0;
        const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
        if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) fail(std::string("bad ") + what);
        return v;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(Kind::non_numeric, line_no_, what); }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

}  // namespace

void save_model(std::ostream& out, const ForestModel& model) {
    const auto& p = model.params();
    out << "posture-forest " << kModelFormatVersion << '\n';
    out << "n_trees " << model.trees().size() << '\n';
    out << "max_depth " << (p.max_depth ? std::to_string(*p.max_depth) : "none") << '\n';
    out << "min_leaf " << p.min_leaf << '\n';
    out << "mtry " << p.resolved_mtry(model.feature_names().size()) << '\n';
    out << "seed " << p.seed << '\n';
    out << "bootstrap " << (p.bootstrap ? 1 : 0) << '\n';
    const auto& m = model.meta();
    out << "meta " << (m.device_set.empty() ? "-" : m.device_set) << ' ' << (m.balance.empty() ? "-" : m.balance)
        << ' ' << m.seed << '\n';
    out << "classes lying sitting\n";
    out << "features " << model.feature_names().size();
    for (const auto& f : model.feature_names()) out << ' ' << f;
    out << '\n';
    std::string buf;
    for (std::size_t t = 0; t < model.trees().size(); ++t) {
        const auto nodes = model.trees()[t].nodes();
        out << "tree " << t << ' ' << nodes.size() << '\n';
        for (const auto& n : nodes) {
            buf.clear();
            buf += std::to_string(n.feature);
            buf += ' ';
            buf += shortest(n.threshold);
            buf += ' ';
            buf += std::to_string(n.left);
            buf += ' ';
            buf += std::to_string(n.right);
            buf += ' ';
            buf += std::to_string(n.counts[0]);
            buf += ' ';
            buf += std::to_string(n.counts[1]);
            buf += '\n';
            out << buf;
        }
    }
    out << "end\n";
}

ForestModel load_model(std::istream& in) {
    Reader r(in);
    auto header = r.line("posture-forest");
    const int version = r.read<int>(header, "format version");
    if (version != kModelFormatVersion) r.fail("unsupported model format version " + std::to_string(version));

    ForestParams p;
    auto l = r.line("n_trees");
    p.n_trees = r.read<std::size_t>(l, "n_trees");
    l = r.line("max_depth");
    const auto depth = r.read<std::string>(l, "max_depth");
    if (depth != "none") p.max_depth = static_cast<std::size_t>(r.read_double(depth, "max_depth"));
    l = r.line("min_leaf");
    p.min_leaf = r.read<std::size_t>(l, "min_leaf");
    l = r.line("mtry");
    p.mtry = r.read<std::size_t>(l, "mtry");
    l = r.line("seed");
    p.seed = r.read<std::uint64_t>(l, "seed");
    l = r.line("bootstrap");
    p.bootstrap = r.read<int>(l, "bootstrap") != 0;

    TrainingMeta meta;
    l = r.line("meta");
    meta.device_set = r.read<std::string>(l, "meta device set");
    meta.balance = r.read<std::string>(l, "meta balance");
    meta.seed = r.read<std::uint64_t>(l, "meta seed");
    if (meta.device_set == "-") meta.device_set.clear();
    if (meta.balance == "-") meta.balance.clear();

    l = r.line("classes");
    if (r.read<std::string>(l, "class") != "lying" || r.read<std::string>(l, "class") != "sitting") {
        r.fail("class order must be lying sitting");
    }
    l = r.line("features");
    const auto n_features = r.read<std::size_t>(l, "feature count");
    std::vector<std::string> names(n_features);
    for (auto& n : names) n = r.read<std::string>(l, "feature name");

    std::vector<DecisionTree> trees;
    trees.reserve(p.n_trees);
    for (std::size_t t = 0; t < p.n_trees; ++t) {
        l = r.line("tree");
        if (r.read<std::size_t>(l, "tree index") != t) r.fail("trees out of order");
        const auto count = r.read<std::size_t>(l, "node count");
        if (count == 0) r.fail("empty tree");
        std::vector<TreeNode> nodes(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::istringstream ss(r.raw_line());
            TreeNode& n = nodes[i];
            n.feature = r.read<std::int32_t>(ss, "node feature");
            n.threshold = r.read_double(r.read<std::string>(ss, "threshold"), "threshold");
            n.left = r.read<std::int32_t>(ss, "left child");
            n.right = r.read<std::int32_t>(ss, "right child");
            n.counts[0] = r.read<std::uint32_t>(ss, "lying count");
            n.counts[1] = r.read<std::uint32_t>(ss, "sitting count");
            if (!n.is_leaf()) {
                const auto ok = [&](std::int32_t c) {
                    return c > static_cast<std::int32_t>(i) && c < static_cast<std::int32_t>(count);
                };
                if (static_cast<std::size_t>(n.feature) >= n_features || !ok(n.left) || !ok(n.right)) {
                    r.fail("node " + std::to_string(i) + " of tree " + std::to_string(t) + " is malformed");
                }
            }
        }
        trees.emplace_back(std::move(nodes));
    }
    l = r.line("end");
    return ForestModel(p, std::move(names), std::move(trees), std::move(meta));
}

}  // namespace posture
