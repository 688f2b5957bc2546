#include "forgecl/model.hpp"

#include <cmath>
#include <random>

#include "forgecl/errors.hpp"
#include "forgecl/rng.hpp"

namespace forgecl {

void ModelConfig::validate() const {
    if (seq_len <= 0 || channels <= 0 || hidden_layers <= 0 || hidden_size <= 0 ||
        output_dim <= 0 || batch_size <= 0)
        throw ConfigError("model dimensions must be positive");
    if (static_cast<long long>(seq_len) * channels != input_dim)
        throw ConfigError("seq_len * channels must equal input_dim (" +
                          std::to_string(seq_len) + " * " + std::to_string(channels) +
                          " != " + std::to_string(input_dim) + ")");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

SegmentMapPtr build_segment_map(const ModelConfig& cfg) {
    cfg.validate();
    auto m = std::make_shared<SegmentMap>();
    const std::size_t H = static_cast<std::size_t>(cfg.hidden_size);
    for (int l = 0; l < cfg.hidden_layers; ++l) {
        const std::size_t in = (l == 0) ? static_cast<std::size_t>(cfg.channels) : H;
        const std::string p = "lstm" + std::to_string(l + 1) + ".";
        m->add(p + "w_x", 4 * H, in);
        m->add(p + "w_h", 4 * H, H);
        m->add(p + "b", 4 * H, 1);
    }
    m->add("out.w", static_cast<std::size_t>(cfg.output_dim), H);
    m->add("out.b", static_cast<std::size_t>(cfg.output_dim), 1);
    return m;
}

Batch make_batch(const double* data, int B, int T, int C) {
    Batch b;
    b.x.resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        Eigen::MatrixXd m(C, B);
        for (int n = 0; n < B; ++n)
            for (int c = 0; c < C; ++c)
                m(c, n) = data[(static_cast<std::size_t>(n) * T + t) * C + c];
        b.x[static_cast<std::size_t>(t)] = std::move(m);
    }
    return b;
}

ParamVector init_params(const ModelConfig& cfg, std::uint64_t seed) {
    auto map = build_segment_map(cfg);
    ParamVector p(map);
    Rng rng = make_rng(derive_seed(seed, 0xf17));
    const int H = cfg.hidden_size;

    auto fill_uniform = [&](MatMap m, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    };

    for (int l = 0; l < cfg.hidden_layers; ++l) {
        const std::string pre = "lstm" + std::to_string(l + 1) + ".";
        const std::size_t in = (l == 0) ? static_cast<std::size_t>(cfg.channels)
                                        : static_cast<std::size_t>(H);
        fill_uniform(p.mat(pre + "w_x"), in);
        fill_uniform(p.mat(pre + "w_h"), static_cast<std::size_t>(H));
        auto b = p.vec(pre + "b");
        b.setZero();
        b.segment(H, H).setConstant(1.0);  // forget gate
    }
    fill_uniform(p.mat("out.w"), static_cast<std::size_t>(H));
    p.vec("out.b").setZero();
    return p;
}

namespace {

inline Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& a) {
    return 1.0 / (1.0 + (-a).exp());
}

}  // namespace

ForwardTrace forward(const ParamVector& params, const ModelConfig& cfg, const Batch& batch) {
    cfg.validate();
    if (batch.steps() != cfg.seq_len)
        throw ShapeError("batch has " + std::to_string(batch.steps()) + " timesteps, expected " +
                         std::to_string(cfg.seq_len));
    const int B = batch.batch();
    if (B <= 0) throw ShapeError("empty batch");
    for (const auto& xt : batch.x) {
        if (xt.rows() != cfg.channels || xt.cols() != B)
            throw ShapeError("timestep slice shape mismatch");
        if (!xt.allFinite()) throw DataError("non-finite value in input batch");
    }
    if (!params.map || params.size() != build_segment_map(cfg)->total())
        throw ShapeError("parameter vector does not match config");

    const int H = cfg.hidden_size;
    const int T = cfg.seq_len;

    ForwardTrace tr;
    tr.input = batch;
    tr.layers.resize(static_cast<std::size_t>(cfg.hidden_layers));
    tr.param_fingerprint = fingerprint(params.values);

    for (int l = 0; l < cfg.hidden_layers; ++l) {
        LayerTrace& lt = tr.layers[static_cast<std::size_t>(l)];
        const std::string pre = "lstm" + std::to_string(l + 1) + ".";
        ConstMatMap wx = params.mat(pre + "w_x");
        ConstMatMap wh = params.mat(pre + "w_h");
        ConstVecMap b = params.vec(pre + "b");

        lt.gate_i.resize(static_cast<std::size_t>(T));
        lt.gate_f.resize(static_cast<std::size_t>(T));
        lt.gate_g.resize(static_cast<std::size_t>(T));
        lt.gate_o.resize(static_cast<std::size_t>(T));
        lt.cell.resize(static_cast<std::size_t>(T));
        lt.cell_tanh.resize(static_cast<std::size_t>(T));
        lt.hidden.resize(static_cast<std::size_t>(T));

        Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(H, B);
        Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(H, B);
        for (int t = 0; t < T; ++t) {
            const Eigen::MatrixXd& xin =
                (l == 0) ? batch.x[static_cast<std::size_t>(t)]
                         : tr.layers[static_cast<std::size_t>(l - 1)].hidden[static_cast<std::size_t>(t)];
            Eigen::MatrixXd pre_act = wx * xin + wh * h_prev;
            pre_act.colwise() += b;

            auto a = pre_act.array();
            Eigen::MatrixXd gi = sigmoid(a.topRows(H)).matrix();
            Eigen::MatrixXd gf = sigmoid(a.middleRows(H, H)).matrix();
            Eigen::MatrixXd gg = a.middleRows(2 * H, H).tanh().matrix();
            Eigen::MatrixXd go = sigmoid(a.bottomRows(H)).matrix();

            Eigen::MatrixXd c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
            Eigen::MatrixXd ct = c.array().tanh().matrix();
            Eigen::MatrixXd h = go.cwiseProduct(ct);

            auto ti = static_cast<std::size_t>(t);
            lt.gate_i[ti] = std::move(gi);
            lt.gate_f[ti] = std::move(gf);
            lt.gate_g[ti] = std::move(gg);
            lt.gate_o[ti] = std::move(go);
            lt.cell[ti] = c;
            lt.cell_tanh[ti] = std::move(ct);
            lt.hidden[ti] = h;
            h_prev = std::move(h);
            c_prev = std::move(c);
        }
    }

    ConstMatMap wo = params.mat("out.w");
    ConstVecMap bo = params.vec("out.b");
    tr.logits = wo * tr.layers.back().hidden[static_cast<std::size_t>(T - 1)];
    tr.logits.colwise() += bo;
    return tr;
}

Gradient backward_from_logit_grad(const ForwardTrace& trace, const ParamVector& params,
                                  const ModelConfig& cfg, const Eigen::MatrixXd& dlogits,
                                  const Gradient* extra_loss_grad) {
    if (trace.param_fingerprint != fingerprint(params.values))
        throw UsageError("stale trace: parameters changed since forward()");
    const int B = trace.input.batch();
    const int T = cfg.seq_len;
    const int H = cfg.hidden_size;
    if (dlogits.rows() != cfg.output_dim || dlogits.cols() != B)
        throw ShapeError("dlogits shape mismatch");

    Gradient g(params.map);
    const LayerTrace& top = trace.layers.back();

    g.mat("out.w") = dlogits * top.hidden[static_cast<std::size_t>(T - 1)].transpose();
    g.vec("out.b") = dlogits.rowwise().sum();

    // dh[l], dc[l]: gradients flowing into layer l's state at the current
    // timestep from the future.
    std::vector<Eigen::MatrixXd> dh(static_cast<std::size_t>(cfg.hidden_layers),
                                    Eigen::MatrixXd::Zero(H, B));
    std::vector<Eigen::MatrixXd> dc(static_cast<std::size_t>(cfg.hidden_layers),
                                    Eigen::MatrixXd::Zero(H, B));
    dh.back() = params.mat("out.w").transpose() * dlogits;

    for (int t = T - 1; t >= 0; --t) {
        const auto ti = static_cast<std::size_t>(t);
        Eigen::MatrixXd dx_from_above;  // set by layer l+1, consumed by layer l
        for (int l = cfg.hidden_layers - 1; l >= 0; --l) {
            const auto li = static_cast<std::size_t>(l);
            const LayerTrace& lt = trace.layers[li];
            const std::string pre = "lstm" + std::to_string(l + 1) + ".";

            Eigen::MatrixXd dh_t = dh[li];
            if (l < cfg.hidden_layers - 1) dh_t += dx_from_above;

            const Eigen::MatrixXd& gi = lt.gate_i[ti];
            const Eigen::MatrixXd& gf = lt.gate_f[ti];
            const Eigen::MatrixXd& gg = lt.gate_g[ti];
            const Eigen::MatrixXd& go = lt.gate_o[ti];
            const Eigen::MatrixXd& ct = lt.cell_tanh[ti];

            Eigen::MatrixXd dc_t =
                dc[li] + (dh_t.array() * go.array() * (1.0 - ct.array().square())).matrix();

            const Eigen::MatrixXd c_prev =
                (t > 0) ? lt.cell[ti - 1] : Eigen::MatrixXd::Zero(H, B);
            const Eigen::MatrixXd h_prev =
                (t > 0) ? lt.hidden[ti - 1] : Eigen::MatrixXd::Zero(H, B);

            Eigen::MatrixXd da(4 * H, B);
            da.topRows(H) =
                (dc_t.array() * gg.array() * gi.array() * (1.0 - gi.array())).matrix();
            da.middleRows(H, H) =
                (dc_t.array() * c_prev.array() * gf.array() * (1.0 - gf.array())).matrix();
            da.middleRows(2 * H, H) =
                (dc_t.array() * gi.array() * (1.0 - gg.array().square())).matrix();
            da.bottomRows(H) =
                (dh_t.array() * ct.array() * go.array() * (1.0 - go.array())).matrix();

            const Eigen::MatrixXd& xin =
                (l == 0) ? trace.input.x[ti] : trace.layers[li - 1].hidden[ti];
            g.mat(pre + "w_x") += da * xin.transpose();
            g.mat(pre + "w_h") += da * h_prev.transpose();
            g.vec(pre + "b") += da.rowwise().sum();

            dh[li] = params.mat(pre + "w_h").transpose() * da;
            dc[li] = dc_t.cwiseProduct(gf);
            if (l > 0) dx_from_above = params.mat(pre + "w_x").transpose() * da;
        }
    }

    if (extra_loss_grad) {
        require_congruent(params, *extra_loss_grad);
        for (std::size_t i = 0; i < g.values.size(); ++i)
            g.values[i] += extra_loss_grad->values[i];
    }
    return g;
}

}  // namespace forgecl
