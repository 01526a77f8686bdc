#include "run_config.hpp"

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "shakenwell/errors.hpp"

namespace shakenwell::cli {

namespace pt = boost::property_tree;

namespace {

std::string fmt(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw UsageError("bad number for " + key + ": '" + s + "'");
  return v;
}

long parse_long(const std::string& key, const std::string& s) {
  long v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw UsageError("bad integer for " + key + ": '" + s + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw UsageError("bad boolean for " + key + ": '" + s + "'");
}

// One accessor per key so writing and reading share a single table.
struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <class T>
Field real(T RunConfig::*m) {
  return {[m](const RunConfig& c) { return fmt(c.*m); },
          [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_double(k, v); }};
}
Field re_part(cdouble RunConfig::*m) {
  return {[m](const RunConfig& c) { return fmt((c.*m).real()); },
          [m](RunConfig& c, const std::string& k, const std::string& v) { (c.*m).real(parse_double(k, v)); }};
}
Field im_part(cdouble RunConfig::*m) {
  return {[m](const RunConfig& c) { return fmt((c.*m).imag()); },
          [m](RunConfig& c, const std::string& k, const std::string& v) { (c.*m).imag(parse_double(k, v)); }};
}
template <class T>
Field integer(T RunConfig::*m) {
  return {[m](const RunConfig& c) { return std::to_string(c.*m); },
          [m](RunConfig& c, const std::string& k, const std::string& v) {
            const long x = parse_long(k, v);
            if (x < 0 && std::is_unsigned_v<T>) throw UsageError(k + " must be non-negative");
            c.*m = static_cast<T>(x);
          }};
}
Field text(std::string RunConfig::*m) {
  return {[m](const RunConfig& c) { return c.*m; },
          [m](RunConfig& c, const std::string&, const std::string& v) { c.*m = v; }};
}
Field flag(bool RunConfig::*m) {
  return {[m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); },
          [m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_bool(k, v); }};
}

// Ordered "section.key" table.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"run.mode", text(&RunConfig::mode)},
      {"run.output", text(&RunConfig::output)},
      {"drive.V1_re", re_part(&RunConfig::V1)},
      {"drive.V1_im", im_part(&RunConfig::V1)},
      {"drive.V2_re", re_part(&RunConfig::V2)},
      {"drive.V2_im", im_part(&RunConfig::V2)},
      {"drive.omega0", real(&RunConfig::omega0)},
      {"drive.eps", real(&RunConfig::eps)},
      {"sweep.eps_min", real(&RunConfig::eps_min)},
      {"sweep.eps_max", real(&RunConfig::eps_max)},
      {"sweep.eps_points", integer(&RunConfig::eps_points)},
      {"sweep.theta", flag(&RunConfig::theta)},
      {"sweep.threads", integer(&RunConfig::threads)},
      {"dynamics.initial_level", integer(&RunConfig::initial_level)},
      {"dynamics.t_final", real(&RunConfig::t_final)},
      {"dynamics.sample_every", real(&RunConfig::sample_every)},
      {"well.sigma1", real(&RunConfig::sigma1)},
      {"well.sigma2", real(&RunConfig::sigma2)},
      {"path.kind", text(&RunConfig::path_kind)},
      {"path.amplitude", real(&RunConfig::amplitude)},
      {"grid.x_min", real(&RunConfig::x_min)},
      {"grid.x_max", real(&RunConfig::x_max)},
      {"grid.n_points", integer(&RunConfig::n_points)},
      {"grid.dt", real(&RunConfig::dt)},
      {"pde.t_final", real(&RunConfig::pde_t_final)},
      {"pde.sample_every", real(&RunConfig::pde_sample_every)},
      {"pde.snapshot_every", real(&RunConfig::snapshot_every)},
      {"pde.snapshot_prefix", text(&RunConfig::snapshot_prefix)},
      {"pde.absorber", flag(&RunConfig::absorber)},
      {"ep.backend", text(&RunConfig::backend)},
      {"ep.lo", real(&RunConfig::ep_lo)},
      {"ep.hi", real(&RunConfig::ep_hi)},
      {"ep.scan_points", integer(&RunConfig::ep_scan_points)},
      {"ep.xtol", real(&RunConfig::ep_xtol)},
      {"coupler.kappa_e", real(&RunConfig::kappa_e)},
      {"coupler.V_re", re_part(&RunConfig::coupler_V)},
      {"coupler.V_im", im_part(&RunConfig::coupler_V)},
      {"coupler.profile", text(&RunConfig::profile)},
      {"coupler.input", text(&RunConfig::input)},
      {"coupler.z_final", real(&RunConfig::z_final)},
  };
  return table;
}

}  // namespace

std::string to_ini(const RunConfig& config) {
  pt::ptree tree;
  for (const auto& [key, field] : fields()) tree.put(key, field.get(config));
  std::ostringstream os;
  pt::write_ini(os, tree);
  return os.str();
}

RunConfig from_ini(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(std::string("config parse error: ") + e.what());
  }
  std::map<std::string, const Field*> index;
  for (const auto& [key, field] : fields()) index[key] = &field;

  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw UsageError("config key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = index.find(full);
      if (it == index.end()) throw UsageError("unknown config key '" + full + "'");
      it->second->set(c, full, value.data());
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_ini(ss.str());
}

std::string config_hash(const RunConfig& config) {
  const std::string text = to_ini(config);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError(msg);
  };
  require(c.mode == "sweep" || c.mode == "dynamics" || c.mode == "pde" || c.mode == "ep-find" ||
              c.mode == "coupler",
          "unknown mode '" + c.mode + "'");
  require(c.omega0 > 0.0, "omega0 must be positive");
  if (c.mode == "sweep") {
    require(c.eps_min > 0.0, "eps_min must be positive");
    require(c.eps_max > c.eps_min, "empty eps range");
    require(c.eps_points >= 2, "eps_points must be at least 2");
  } else if (c.mode == "dynamics") {
    require(c.eps > 0.0, "eps must be positive");
    require(c.initial_level == 1 || c.initial_level == 2, "initial_level must be 1 or 2");
    require(c.t_final > 0.0 && c.sample_every > 0.0, "t_final and sample_every must be positive");
  } else if (c.mode == "pde") {
    require(c.eps > 0.0, "eps must be positive");
    require(c.path_kind == "sinusoidal" || c.path_kind == "one-sided", "path kind must be sinusoidal or one-sided");
    require(c.x_max > c.x_min && c.n_points > 0 && c.dt > 0.0, "bad grid");
    require(c.pde_t_final > 0.0 && c.pde_sample_every > 0.0, "pde t_final and sample_every must be positive");
    require(c.snapshot_every >= 0.0, "snapshot_every must be non-negative");
    require(c.snapshot_every == 0.0 || !c.snapshot_prefix.empty(), "snapshots need snapshot_prefix");
  } else if (c.mode == "ep-find") {
    require(c.backend == "twolevel" || c.backend == "pde", "backend must be twolevel or pde");
    require(c.ep_lo > 0.0 && c.ep_hi > c.ep_lo, "empty eps window");
    require(c.ep_scan_points >= 3, "scan_points must be at least 3");
    require(c.ep_xtol > 0.0, "xtol must be positive");
  } else if (c.mode == "coupler") {
    require(c.kappa_e > 0.0 && c.eps > 0.0, "kappa_e and eps must be positive");
    require(c.z_final > 0.0 && c.sample_every > 0.0, "z_final and sample_every must be positive");
    require(c.input == "S" || c.input == "A" || c.input == "guide1" || c.input == "guide2",
            "input must be S, A, guide1 or guide2");
  }
}

}  // namespace shakenwell::cli
