#include "drp/netgraph.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace drp {

namespace {

using nlohmann::json;

NodeRole parse_role(const std::string& s) {
    if (s == "inverter" || s == "Inverter") return NodeRole::Inverter;
    if (s == "interior" || s == "Interior") return NodeRole::Interior;
    if (s == "infinite" || s == "Infinite") return NodeRole::Infinite;
    throw NetworkError("unknown node role '" + s + "'");
}

constexpr double kMinReactance = 1e-9;

}  // namespace

void validate(const NetworkSpec& spec) {
    if (!(spec.k > 0.0))
        throw NetworkError("scaling factor k must be > 0, got " + std::to_string(spec.k));
    if (spec.nodes.empty()) throw NetworkError("network has no nodes");

    std::set<int> ids;
    int n_infinite = 0;
    int n_inverter = 0;
    for (const auto& n : spec.nodes) {
        if (!ids.insert(n.id).second)
            throw NetworkError("duplicate node id " + std::to_string(n.id));
        if (n.role == NodeRole::Infinite) ++n_infinite;
        if (n.role == NodeRole::Inverter) ++n_inverter;
    }
    if (n_infinite != 1)
        throw NetworkError("expected exactly one infinite node, found " +
                           std::to_string(n_infinite));
    if (n_inverter < 1) throw NetworkError("network has no inverter nodes");

    for (const auto& br : spec.branches) {
        if (br.from == br.to)
            throw NetworkError("self-loop branch at node " + std::to_string(br.from));
        if (!ids.count(br.from) || !ids.count(br.to))
            throw NetworkError("branch " + std::to_string(br.from) + "-" +
                               std::to_string(br.to) + " references a missing node");
        if (!(br.x_pu > kMinReactance))
            throw NetworkError("branch " + std::to_string(br.from) + "-" +
                               std::to_string(br.to) + " has x_pu=" +
                               std::to_string(br.x_pu) + " (must exceed 1e-9)");
    }

    // connectivity by union-find over node ids
    std::vector<int> order;
    for (const auto& n : spec.nodes) order.push_back(n.id);
    std::sort(order.begin(), order.end());
    auto index_of = [&](int id) {
        return static_cast<size_t>(std::lower_bound(order.begin(), order.end(), id) -
                                   order.begin());
    };
    std::vector<size_t> parent(order.size());
    for (size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<size_t(size_t)> find = [&](size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (const auto& br : spec.branches)
        parent[find(index_of(br.from))] = find(index_of(br.to));
    const size_t root = find(0);
    for (size_t i = 1; i < parent.size(); ++i)
        if (find(i) != root)
            throw NetworkError("network graph is disconnected (node " +
                               std::to_string(order[i]) + " unreachable)");
}

NetworkSpec parse_network(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw NetworkError(std::string("network file parse failure: ") + e.what());
    }

    NetworkSpec spec;
    try {
        const auto& base = j.at("base");
        spec.base.u_base_kv = base.at("u_base_kv").get<double>();
        spec.base.s_base_mva = base.at("s_base_mva").get<double>();
        spec.base.f_base_hz = base.at("f_base_hz").get<double>();
        spec.k = j.at("k").get<double>();
        for (const auto& jn : j.at("nodes")) {
            NetworkNode n;
            n.id = jn.at("id").get<int>();
            n.role = parse_role(jn.at("role").get<std::string>());
            spec.nodes.push_back(n);
        }
        for (const auto& jb : j.at("branches")) {
            Branch br;
            br.from = jb.at("from").get<int>();
            br.to = jb.at("to").get<int>();
            br.r_pu = jb.at("r_pu").get<double>();
            br.x_pu = jb.at("x_pu").get<double>();
            br.scalable = jb.value("scalable", true);
            spec.branches.push_back(br);
        }
    } catch (const json::exception& e) {
        throw NetworkError(std::string("network schema violation: ") + e.what());
    }

    validate(spec);
    return spec;
}

NetworkSpec load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw NetworkError("cannot open network file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str());
}

NetworkSpec apply_scaling(const NetworkSpec& spec) {
    validate(spec);
    NetworkSpec out = spec;
    for (auto& br : out.branches) {
        if (br.scalable) {
            br.r_pu *= spec.k;
            br.x_pu *= spec.k;
        }
    }
    out.k = 1.0;
    validate(out);
    return out;
}

FullLaplacian build_full_laplacian(const NetworkSpec& spec) {
    validate(spec);

    FullLaplacian full;
    for (const auto& n : spec.nodes) {
        if (n.role == NodeRole::Infinite) continue;
        full.node_ids.push_back(n.id);
        full.roles.push_back(n.role);
    }
    const auto m = static_cast<Eigen::Index>(full.node_ids.size());
    full.a = Eigen::MatrixXd::Zero(m, m);

    auto row_of = [&](int id) -> Eigen::Index {
        for (Eigen::Index i = 0; i < m; ++i)
            if (full.node_ids[static_cast<size_t>(i)] == id) return i;
        return -1;  // infinite node
    };

    for (const auto& br : spec.branches) {
        const double b = 1.0 / br.x_pu;
        const Eigen::Index i = row_of(br.from);
        const Eigen::Index j = row_of(br.to);
        if (i >= 0) full.a(i, i) += b;
        if (j >= 0) full.a(j, j) += b;
        if (i >= 0 && j >= 0) {
            full.a(i, j) -= b;
            full.a(j, i) -= b;
        }
    }
    return full;
}

Eigen::MatrixXd kron_reduce(const Eigen::MatrixXd& full,
                            const std::vector<Eigen::Index>& eliminate) {
    const Eigen::Index m = full.rows();
    std::vector<bool> drop(static_cast<size_t>(m), false);
    for (Eigen::Index e : eliminate) {
        if (e < 0 || e >= m)
            throw NetworkError("kron_reduce: eliminate index " + std::to_string(e) +
                               " out of range");
        drop[static_cast<size_t>(e)] = true;
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < m; ++i)
        if (!drop[static_cast<size_t>(i)]) keep.push_back(i);

    if (eliminate.empty()) return full;

    const auto ne = static_cast<Eigen::Index>(eliminate.size());
    const auto nk = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd a_kk(nk, nk), a_ke(nk, ne), a_ek(ne, nk), a_ee(ne, ne);
    for (Eigen::Index r = 0; r < nk; ++r)
        for (Eigen::Index c = 0; c < nk; ++c) a_kk(r, c) = full(keep[r], keep[c]);
    for (Eigen::Index r = 0; r < nk; ++r)
        for (Eigen::Index c = 0; c < ne; ++c) a_ke(r, c) = full(keep[r], eliminate[c]);
    for (Eigen::Index r = 0; r < ne; ++r)
        for (Eigen::Index c = 0; c < nk; ++c) a_ek(r, c) = full(eliminate[r], keep[c]);
    for (Eigen::Index r = 0; r < ne; ++r)
        for (Eigen::Index c = 0; c < ne; ++c) a_ee(r, c) = full(eliminate[r], eliminate[c]);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a_ee);
    if (!lu.isInvertible()) {
        std::string idx;
        for (Eigen::Index e : eliminate) idx += std::to_string(e) + " ";
        throw NetworkError("kron_reduce: singular interior block at indices " + idx);
    }
    return a_kk - a_ke * lu.solve(a_ek);
}

GroundedLaplacian kron_reduce(const FullLaplacian& full) {
    std::vector<Eigen::Index> interior;
    GroundedLaplacian out;
    for (Eigen::Index i = 0; i < full.a.rows(); ++i) {
        if (full.roles[static_cast<size_t>(i)] == NodeRole::Interior)
            interior.push_back(i);
        else
            out.node_order.push_back(full.node_ids[static_cast<size_t>(i)]);
    }
    out.b = kron_reduce(full.a, interior);
    check_grounded_laplacian(out.b);
    return out;
}

GroundedLaplacian grounded_laplacian(const NetworkSpec& spec) {
    return kron_reduce(build_full_laplacian(apply_scaling(spec)));
}

void check_grounded_laplacian(const Eigen::MatrixXd& b) {
    if (b.rows() != b.cols())
        throw NetworkError("grounded Laplacian is not square");
    const double asym = (b - b.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12)
        throw NetworkError("grounded Laplacian asymmetry " + std::to_string(asym) +
                           " exceeds 1e-12");
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            if (i != j && b(i, j) > 1e-12)
                throw NetworkError("grounded Laplacian has positive off-diagonal at (" +
                                   std::to_string(i) + "," + std::to_string(j) + ")");
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success)
        throw NetworkError("grounded Laplacian is not positive definite");
}

}  // namespace drp
