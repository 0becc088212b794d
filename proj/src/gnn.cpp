#include "bison/gnn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bison/envs.hpp"
#include "bison/io.hpp"
#include "bison/kernels.hpp"
#include "bison/log.hpp"

namespace bison {

namespace k = kernels;

GnnDims gnn_dims(const Domain& d, size_t n_ego, size_t n_obj_features, size_t n_out,
                 size_t hidden, size_t layers) {
  const size_t P = d.predicates.size();
  GnnDims g;
  g.global = n_ego + 2 * P;
  g.action = d.schemata.size();
  g.object = n_obj_features + 2 * P + static_cast<size_t>(d.max_schema_arity());
  g.hidden = hidden;
  g.layers = layers;
  g.out = n_out;
  return g;
}

GnnLayout gnn_layout(const GnnDims& d) {
  GnnLayout L{};
  const size_t H = d.hidden;
  size_t off = 0;
  auto take = [&](size_t n) {
    size_t o = off;
    off += n;
    return o;
  };
  L.wg0 = take(H * d.global);
  L.wa0 = take(H * d.action);
  L.wo0 = take(H * d.object);
  for (size_t l = 0; l < d.layers; ++l) {
    L.wg.push_back(take(H * H));
    L.wa.push_back(take(H * H));
    L.wo.push_back(take(H * H));
  }
  L.r1 = take(H * H);
  L.b1 = take(H);
  L.r2 = take(d.out * H);
  L.b2 = take(d.out);
  L.total = off;
  return L;
}

GnnParams GnnParams::init(const GnnDims& dims, uint64_t seed) {
  if (dims.hidden == 0 || dims.out == 0 || dims.global == 0 || dims.object == 0)
    throw std::invalid_argument("gnn: zero dimension");
  const GnnLayout L = gnn_layout(dims);
  if (dims.hidden == 64 && dims.layers == 2 && L.total >= kGnnParamLimit)
    throw std::length_error("gnn: " + std::to_string(L.total) +
                            " parameters at default size, limit " +
                            std::to_string(kGnnParamLimit));
  GnnParams p;
  p.dims = dims;
  p.seed = seed;
  p.w.assign(L.total, 0.0);
  std::mt19937_64 rng(seed);
  auto fill = [&](size_t off, size_t n, size_t fan_in) {
    const double b = 1.0 / std::sqrt(static_cast<double>(std::max<size_t>(fan_in, 1)));
    for (size_t i = 0; i < n; ++i) p.w[off + i] = (2 * uniform01(rng) - 1) * b;
  };
  const size_t H = dims.hidden;
  fill(L.wg0, H * dims.global, dims.global);
  fill(L.wa0, H * dims.action, dims.action);
  fill(L.wo0, H * dims.object, dims.object);
  for (size_t l = 0; l < dims.layers; ++l) {
    fill(L.wg[l], H * H, H);
    fill(L.wa[l], H * H, H);
    fill(L.wo[l], H * H, H);
  }
  fill(L.r1, H * H, H);
  fill(L.b1, H, H);
  fill(L.r2, dims.out * H, H);
  fill(L.b2, dims.out, H);
  return p;
}

GnnInput encode(const Domain& d, const LLState& lls, const GroundAction& hla,
                const FactSet& goal, const HLState& hls, bool zero_action) {
  const size_t P = d.predicates.size();
  const size_t M = static_cast<size_t>(d.max_schema_arity());
  if (hla.schema < 0 || static_cast<size_t>(hla.schema) >= d.schemata.size())
    throw std::out_of_range("encode: unknown schema");
  for (int32_t o : hla.args)
    if (o < 0 || static_cast<size_t>(o) >= lls.objects.size())
      throw std::out_of_range("encode: action references unknown object " +
                              std::to_string(o));
  GnnInput x;
  x.global.assign(lls.ego.size() + 2 * P, 0.0);
  std::copy(lls.ego.begin(), lls.ego.end(), x.global.begin());
  const size_t n_ego = lls.ego.size();
  for (const auto& f : hls)
    if (f.arity == 0) x.global[n_ego + f.pred] += 1;
  for (const auto& f : goal)
    if (f.arity == 0) x.global[n_ego + P + f.pred] += 1;

  x.action.assign(d.schemata.size(), 0.0);
  if (zero_action) {
    // PureNN-style: no HL state, goal or action node, so every object is a
    // node carrying only its LL features.
    std::fill(x.global.begin() + static_cast<std::ptrdiff_t>(n_ego), x.global.end(), 0.0);
    for (const auto& feats : lls.objects) {
      std::vector<double> v(feats.size() + 2 * P + M, 0.0);
      std::copy(feats.begin(), feats.end(), v.begin());
      x.objects.push_back(std::move(v));
    }
    return x;
  }
  x.action[hla.schema] = 1;

  for (size_t i = 0; i < hla.args.size(); ++i) {
    const int32_t o = hla.args[i];
    const auto& feats = lls.objects[o];
    std::vector<double> v(feats.size() + 2 * P + M, 0.0);
    std::copy(feats.begin(), feats.end(), v.begin());
    const size_t base = feats.size();
    for (const auto& f : hls)
      if (f.arity == 1 && f.args[0] == o) v[base + f.pred] += 1;
    for (const auto& f : goal)
      if (f.arity == 1 && f.args[0] == o) v[base + P + f.pred] += 1;
    v[base + 2 * P + i] = 1;
    x.objects.push_back(std::move(v));
  }
  return x;
}

namespace {

using Vec = std::vector<double>;

void check_shapes(const GnnParams& p, const GnnInput& x) {
  if (x.global.size() != p.dims.global || x.action.size() != p.dims.action)
    throw std::invalid_argument("gnn: input shape mismatch");
  for (const auto& o : x.objects)
    if (o.size() != p.dims.object) throw std::invalid_argument("gnn: object shape mismatch");
}

void relu(Vec& v) {
  for (double& e : v) e = e > 0 ? e : 0.0;
}

void add3(Vec& out, const Vec& a, const Vec& b, const Vec& c) {
  out.resize(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i] + c[i];
}

// Element-wise max over object nodes; arg gets the first maximising index.
void max_pool(const std::vector<Vec>& O, size_t H, Vec& out, std::vector<int32_t>& arg) {
  out.assign(H, 0.0);
  arg.assign(H, -1);
  if (O.empty()) return;
  out = O[0];
  arg.assign(H, 0);
  for (size_t i = 1; i < O.size(); ++i)
    for (size_t j = 0; j < H; ++j)
      if (O[i][j] > out[j]) {
        out[j] = O[i][j];
        arg[j] = static_cast<int32_t>(i);
      }
}

struct Cache {
  // Index l holds the node states entering round l; index L the final ones.
  std::vector<Vec> G, A, hO;
  std::vector<std::vector<Vec>> O;
  std::vector<std::vector<int32_t>> arg;
  std::vector<Vec> sg, sa;
  std::vector<std::vector<Vec>> so;
  Vec z, r, y;
};

void run_forward(const GnnParams& p, const GnnInput& x, Cache& c) {
  check_shapes(p, x);
  const auto& D = p.dims;
  const size_t H = D.hidden, L = D.layers;
  const GnnLayout lay = gnn_layout(D);
  const double* w = p.w.data();
  c.G.assign(L + 1, Vec(H));
  c.A.assign(L + 1, Vec(H));
  c.hO.assign(L + 1, Vec(H));
  c.O.assign(L + 1, std::vector<Vec>(x.objects.size(), Vec(H)));
  c.arg.assign(L + 1, {});
  c.sg.assign(L, Vec(H));
  c.sa.assign(L, Vec(H));
  c.so.assign(L, std::vector<Vec>(x.objects.size(), Vec(H)));

  k::matvec(w + lay.wg0, H, D.global, x.global.data(), c.G[0].data());
  k::matvec(w + lay.wa0, H, D.action, x.action.data(), c.A[0].data());
  for (size_t i = 0; i < x.objects.size(); ++i)
    k::matvec(w + lay.wo0, H, D.object, x.objects[i].data(), c.O[0][i].data());

  for (size_t l = 0; l < L; ++l) {
    max_pool(c.O[l], H, c.hO[l], c.arg[l]);
    add3(c.sg[l], c.G[l], c.A[l], c.hO[l]);
    k::matvec(w + lay.wg[l], H, H, c.sg[l].data(), c.G[l + 1].data());
    relu(c.G[l + 1]);
    add3(c.sa[l], c.G[l + 1], c.A[l], c.hO[l]);
    k::matvec(w + lay.wa[l], H, H, c.sa[l].data(), c.A[l + 1].data());
    relu(c.A[l + 1]);
    for (size_t i = 0; i < x.objects.size(); ++i) {
      add3(c.so[l][i], c.G[l + 1], c.A[l], c.O[l][i]);
      k::matvec(w + lay.wo[l], H, H, c.so[l][i].data(), c.O[l + 1][i].data());
      relu(c.O[l + 1][i]);
    }
  }
  max_pool(c.O[L], H, c.hO[L], c.arg[L]);
  add3(c.z, c.G[L], c.A[L], c.hO[L]);
  c.r.assign(H, 0.0);
  k::matvec(w + lay.r1, H, H, c.z.data(), c.r.data());
  for (size_t i = 0; i < H; ++i) c.r[i] += w[lay.b1 + i];
  relu(c.r);
  c.y.assign(D.out, 0.0);
  k::matvec(w + lay.r2, D.out, H, c.r.data(), c.y.data());
  for (size_t i = 0; i < D.out; ++i) c.y[i] += w[lay.b2 + i];
}

void mask(Vec& g, const Vec& post) {
  for (size_t i = 0; i < g.size(); ++i)
    if (!(post[i] > 0)) g[i] = 0;
}

void scatter_max(const Vec& g, const std::vector<int32_t>& arg, std::vector<Vec>& dO) {
  for (size_t j = 0; j < g.size(); ++j)
    if (arg[j] >= 0) dO[arg[j]][j] += g[j];
}

}  // namespace

LLAction forward(const GnnParams& p, const GnnInput& x) {
  Cache c;
  run_forward(p, x, c);
  return c.y;
}

std::vector<int32_t> activation_pattern(const GnnParams& p, const GnnInput& x) {
  Cache c;
  run_forward(p, x, c);
  std::vector<int32_t> pat;
  auto bits = [&](const Vec& v) {
    for (double e : v) pat.push_back(e > 0);
  };
  for (size_t l = 1; l <= p.dims.layers; ++l) {
    bits(c.G[l]);
    bits(c.A[l]);
    for (const auto& o : c.O[l]) bits(o);
  }
  for (const auto& a : c.arg) pat.insert(pat.end(), a.begin(), a.end());
  bits(c.r);
  return pat;
}

double backward(const GnnParams& p, const GnnInput& x, const LLAction& target,
                std::vector<double>& grad) {
  if (target.size() != p.dims.out) throw std::invalid_argument("gnn: target dim mismatch");
  if (grad.size() != p.count()) throw std::invalid_argument("gnn: grad size mismatch");
  Cache c;
  run_forward(p, x, c);
  const auto& D = p.dims;
  const size_t H = D.hidden, L = D.layers, n = x.objects.size();
  const GnnLayout lay = gnn_layout(D);
  const double* w = p.w.data();
  double* gw = grad.data();

  double loss = 0;
  Vec dy(D.out);
  for (size_t i = 0; i < D.out; ++i) {
    const double e = c.y[i] - target[i];
    loss += e * e;
    dy[i] = 2 * e / static_cast<double>(D.out);
  }
  loss /= static_cast<double>(D.out);

  // readout
  k::outer_acc(gw + lay.r2, D.out, H, dy.data(), c.r.data());
  for (size_t i = 0; i < D.out; ++i) gw[lay.b2 + i] += dy[i];
  Vec dr(H, 0.0);
  k::matvec_t_acc(w + lay.r2, D.out, H, dy.data(), dr.data());
  mask(dr, c.r);
  k::outer_acc(gw + lay.r1, H, H, dr.data(), c.z.data());
  for (size_t i = 0; i < H; ++i) gw[lay.b1 + i] += dr[i];
  Vec dz(H, 0.0);
  k::matvec_t_acc(w + lay.r1, H, H, dr.data(), dz.data());

  Vec dG = dz, dA = dz;
  std::vector<Vec> dO(n, Vec(H, 0.0));
  scatter_max(dz, c.arg[L], dO);

  for (size_t l = L; l-- > 0;) {
    Vec dGp(H, 0.0), dAp(H, 0.0), dhO(H, 0.0);
    std::vector<Vec> dOp(n, Vec(H, 0.0));
    // object updates
    for (size_t i = 0; i < n; ++i) {
      Vec g = dO[i];
      mask(g, c.O[l + 1][i]);
      k::outer_acc(gw + lay.wo[l], H, H, g.data(), c.so[l][i].data());
      Vec ds(H, 0.0);
      k::matvec_t_acc(w + lay.wo[l], H, H, g.data(), ds.data());
      for (size_t j = 0; j < H; ++j) {
        dG[j] += ds[j];
        dAp[j] += ds[j];
        dOp[i][j] += ds[j];
      }
    }
    // action update
    {
      Vec g = dA;
      mask(g, c.A[l + 1]);
      k::outer_acc(gw + lay.wa[l], H, H, g.data(), c.sa[l].data());
      Vec ds(H, 0.0);
      k::matvec_t_acc(w + lay.wa[l], H, H, g.data(), ds.data());
      for (size_t j = 0; j < H; ++j) {
        dG[j] += ds[j];
        dAp[j] += ds[j];
        dhO[j] += ds[j];
      }
    }
    // global update
    {
      Vec g = dG;
      mask(g, c.G[l + 1]);
      k::outer_acc(gw + lay.wg[l], H, H, g.data(), c.sg[l].data());
      Vec ds(H, 0.0);
      k::matvec_t_acc(w + lay.wg[l], H, H, g.data(), ds.data());
      for (size_t j = 0; j < H; ++j) {
        dGp[j] += ds[j];
        dAp[j] += ds[j];
        dhO[j] += ds[j];
      }
    }
    scatter_max(dhO, c.arg[l], dOp);
    dG = std::move(dGp);
    dA = std::move(dAp);
    dO = std::move(dOp);
  }

  k::outer_acc(gw + lay.wg0, H, D.global, dG.data(), x.global.data());
  k::outer_acc(gw + lay.wa0, H, D.action, dA.data(), x.action.data());
  for (size_t i = 0; i < n; ++i)
    k::outer_acc(gw + lay.wo0, H, D.object, dO[i].data(), x.objects[i].data());
  return loss;
}

void TrainConfig::validate() const {
  if (batch == 0 || hidden == 0 || layers == 0 || !(lr > 0) || !(eps > 0) ||
      !(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw std::invalid_argument("train config: values must be positive");
}

double cosine_lr(size_t t, size_t T, double lr0) {
  if (T == 0 || t >= T) return 0.0;
  return 0.5 * lr0 * (1 + std::cos(std::numbers::pi * static_cast<double>(t) /
                                   static_cast<double>(T)));
}

std::vector<Sample> build_dataset(const std::vector<Demo>& demos, const Domain& d,
                                  const Labelling& label, bool zero_action) {
  std::vector<Sample> out;
  for (const auto& demo : demos) {
    if (demo.steps.empty()) continue;
    const HLTrace tr = extract_hl_trace(demo, d, label);
    if (tr.actions.empty()) continue;
    size_t seg = 0;
    for (size_t j = 0; j < demo.steps.size(); ++j) {
      const auto& st = demo.steps[j];
      if (st.action.empty()) continue;
      // change_steps[k] is the LL step whose state first shows states[k + 1].
      while (seg < tr.change_steps.size() && tr.change_steps[seg] <= j) ++seg;
      const size_t ai = std::min(seg, tr.actions.size() - 1);
      out.push_back({encode(d, st.state, tr.actions[ai], tr.goal, tr.states[seg],
                            zero_action),
                     st.action});
    }
  }
  return out;
}

GnnParams train_on(const std::vector<Sample>& data, const GnnDims& dims,
                   const TrainConfig& cfg, TrainStats* stats) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  GnnParams p = GnnParams::init(dims, cfg.seed);
  p.zero_action = cfg.zero_action;
  if (stats) {
    stats->samples = data.size();
    stats->loss.clear();
  }
  const size_t N = p.count();
  std::vector<double> m(N, 0.0), v(N, 0.0), g(N);
  std::mt19937_64 rng(cfg.seed ^ 0x5bd1e995ULL);
  std::vector<size_t> order(data.size());
  double b1t = 1, b2t = 1;
  for (size_t t = 0; t < cfg.iterations; ++t) {
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    const double lr = cosine_lr(t, cfg.iterations, cfg.lr);
    double loss = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch) {
      const size_t end = std::min(order.size(), start + cfg.batch);
      std::fill(g.begin(), g.end(), 0.0);
      for (size_t k = start; k < end; ++k) {
        const Sample& s = data[order[k]];
        loss += backward(p, s.x, s.y, g);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      b1t *= cfg.beta1;
      b2t *= cfg.beta2;
      for (size_t i = 0; i < N; ++i) {
        const double gi = g[i] * inv;
        m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * gi;
        v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * gi * gi;
        const double mh = m[i] / (1 - b1t), vh = v[i] / (1 - b2t);
        p.w[i] -= lr * mh / (std::sqrt(vh) + cfg.eps);
      }
    }
    // mean loss over the pass, measured while the weights moved
    loss /= static_cast<double>(order.size());
    if (stats) stats->loss.push_back(loss);
    log::debug("train-ll iter {} loss {:.6f}", t + 1, loss);
  }
  return p;
}

GnnParams train(const std::vector<Demo>& demos, const Domain& d,
                const Labelling& label, const TrainConfig& cfg, TrainStats* stats) {
  cfg.validate();
  auto data = build_dataset(demos, d, label, cfg.zero_action);
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const auto& s0 = data[0];
  GnnDims dims;
  dims.global = s0.x.global.size();
  dims.action = s0.x.action.size();
  dims.object = s0.x.objects.empty() ? 0 : s0.x.objects[0].size();
  for (const auto& s : data)
    if (!s.x.objects.empty()) dims.object = s.x.objects[0].size();
  dims.hidden = cfg.hidden;
  dims.layers = cfg.layers;
  dims.out = s0.y.size();
  GnnParams p = train_on(data, dims, cfg, stats);
  p.domain = d.name;
  return p;
}

double dataset_mse(const GnnParams& p, const std::vector<Sample>& data) {
  if (data.empty()) return 0;
  double s = 0;
  for (const auto& e : data) {
    const auto y = forward(p, e.x);
    double l = 0;
    for (size_t i = 0; i < y.size(); ++i) l += (y[i] - e.y[i]) * (y[i] - e.y[i]);
    s += l / static_cast<double>(y.size());
  }
  return s / static_cast<double>(data.size());
}

namespace {

constexpr char kMagic[] = "BSW1\n";

uint64_t to_le(uint64_t u) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(u);
  return u;
}

}  // namespace

std::string serialize_params(const GnnParams& p) {
  nlohmann::json h;
  h["format"] = "bison-weights";
  h["dims"] = {{"global", p.dims.global}, {"action", p.dims.action},
               {"object", p.dims.object}, {"hidden", p.dims.hidden},
               {"layers", p.dims.layers}, {"out", p.dims.out}};
  h["seed"] = p.seed;
  h["zero_action"] = p.zero_action;
  h["domain"] = p.domain;
  h["count"] = p.count();
  std::string out = kMagic;
  out += h.dump();
  out += '\n';
  const size_t base = out.size();
  out.resize(base + 8 * p.count());
  for (size_t i = 0; i < p.count(); ++i) {
    const uint64_t u = to_le(std::bit_cast<uint64_t>(p.w[i]));
    std::memcpy(out.data() + base + 8 * i, &u, 8);
  }
  return out;
}

GnnParams parse_params(const std::string& bytes) {
  const size_t ml = sizeof(kMagic) - 1;
  if (bytes.compare(0, ml, kMagic) != 0) throw std::runtime_error("weights: bad magic");
  const size_t nl = bytes.find('\n', ml);
  if (nl == std::string::npos) throw std::runtime_error("weights: missing header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(ml, nl - ml));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("weights: bad header: ") + e.what());
  }
  GnnParams p;
  try {
    const auto& d = h.at("dims");
    p.dims.global = d.at("global");
    p.dims.action = d.at("action");
    p.dims.object = d.at("object");
    p.dims.hidden = d.at("hidden");
    p.dims.layers = d.at("layers");
    p.dims.out = d.at("out");
    p.seed = h.at("seed");
    p.zero_action = h.at("zero_action");
    p.domain = h.at("domain");
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("weights: bad header: ") + e.what());
  }
  const size_t count = h.value("count", size_t{0});
  if (count != gnn_layout(p.dims).total)
    throw std::runtime_error("weights: count does not match dims");
  if (bytes.size() - nl - 1 != 8 * count)
    throw std::runtime_error("weights: payload size mismatch");
  p.w.resize(count);
  for (size_t i = 0; i < count; ++i) {
    uint64_t u;
    std::memcpy(&u, bytes.data() + nl + 1 + 8 * i, 8);
    p.w[i] = std::bit_cast<double>(to_le(u));
  }
  return p;
}

void save_params(const std::string& path, const GnnParams& p) {
  write_file(path, serialize_params(p));
}

GnnParams load_params(const std::string& path) { return parse_params(read_file(path)); }

}  // namespace bison
