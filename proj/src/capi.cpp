#include "patchlesion.h"

#include <cstdio>
#include <cstring>
#include <string>

#include "pla/config.hpp"
#include "pla/train.hpp"

namespace {

thread_local std::string g_last_error;

pla_status to_status(pla::ErrorCode code) {
  switch (code) {
    case pla::ErrorCode::ok: return PLA_OK;
    case pla::ErrorCode::config: return PLA_ERR_CONFIG;
    case pla::ErrorCode::io: return PLA_ERR_IO;
    case pla::ErrorCode::shape: return PLA_ERR_SHAPE;
    case pla::ErrorCode::runtime: return PLA_ERR_RUNTIME;
  }
  return PLA_ERR_RUNTIME;
}

template <class Fn>
pla_status wrap(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PLA_OK;
  } catch (const pla::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PLA_ERR_RUNTIME;
  }
}

void copy_out(const std::string& text, char* buf, size_t buf_len) {
  if (!buf || buf_len == 0) return;
  size_t n = std::min(text.size(), buf_len - 1);
  std::memcpy(buf, text.data(), n);
  buf[n] = '\0';
}

pla_status require_arg(bool ok, const char* msg) {
  if (ok) return PLA_OK;
  g_last_error = msg;
  return PLA_ERR_CONFIG;
}

}  // namespace

struct pla_config {
  pla::KvConfig kv;
};

extern "C" {

pla_config* pla_config_create(void) {
  try {
    return new pla_config();
  } catch (...) {
    return nullptr;
  }
}

void pla_config_destroy(pla_config* cfg) { delete cfg; }

pla_status pla_config_load_file(pla_config* cfg, const char* path) {
  if (auto s = require_arg(cfg && path, "null argument")) return s;
  return wrap([&] { cfg->kv.load_file(path); });
}

pla_status pla_config_set(pla_config* cfg, const char* key,
                          const char* value) {
  if (auto s = require_arg(cfg && key && value, "null argument")) return s;
  return wrap([&] { cfg->kv.set(key, value); });
}

pla_status pla_config_get(const pla_config* cfg, const char* key, char* buf,
                          size_t buf_len) {
  if (auto s = require_arg(cfg && key, "null argument")) return s;
  return wrap([&] { copy_out(cfg->kv.get(key), buf, buf_len); });
}

pla_status pla_train(const pla_config* cfg) {
  if (auto s = require_arg(cfg != nullptr, "null config")) return s;
  return wrap([&] {
    auto resolved = pla::resolve_config(cfg->kv);
    pla::cmd_train(resolved, cfg->kv.resolved_text());
  });
}

pla_status pla_eval(const pla_config* cfg, const char* checkpoint_path) {
  if (auto s = require_arg(cfg && checkpoint_path, "null argument")) return s;
  return wrap([&] {
    auto resolved = pla::resolve_config(cfg->kv);
    pla::cmd_eval(resolved, checkpoint_path);
  });
}

pla_status pla_sweep(const pla_config* cfg, const char* axis,
                     const char* const* values, size_t n_values) {
  if (auto s = require_arg(cfg && axis && (values || n_values == 0),
                           "null argument"))
    return s;
  return wrap([&] {
    std::vector<std::string> v(values, values + n_values);
    pla::cmd_sweep(cfg->kv, axis, v);
  });
}

pla_status pla_gradcheck(const pla_config* cfg, char* report,
                         size_t report_len, int* out_failures) {
  if (auto s = require_arg(cfg != nullptr, "null config")) return s;
  return wrap([&] {
    auto resolved = pla::resolve_config(cfg->kv);
    auto results = pla::cmd_gradcheck(resolved);
    std::string text;
    int failures = 0;
    char line[160];
    for (const auto& r : results) {
      std::snprintf(line, sizeof(line), "%-24s max_rel_err=%.3e tol=%.0e %s\n",
                    r.component.c_str(), r.max_rel_err, r.tolerance,
                    r.pass ? "PASS" : "FAIL");
      text += line;
      if (!r.pass) ++failures;
    }
    copy_out(text, report, report_len);
    if (out_failures) *out_failures = failures;
  });
}

pla_status pla_gen_synth(const pla_config* cfg, char* report,
                         size_t report_len) {
  if (auto s = require_arg(cfg != nullptr, "null config")) return s;
  return wrap([&] {
    auto resolved = pla::resolve_config(cfg->kv);
    auto text = pla::cmd_gen_synth(resolved, cfg->kv.resolved_text());
    copy_out(text, report, report_len);
  });
}

const char* pla_last_error(void) { return g_last_error.c_str(); }

const char* pla_version(void) { return "0.1.0"; }

}  // extern "C"
