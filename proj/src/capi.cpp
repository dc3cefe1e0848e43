// SPDX-License-Identifier: Apache-2.0

#include "ltshap.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "explain.hpp"
#include "oracle.hpp"
#include "tree_gen.hpp"
#include "tree_model.hpp"

struct lts_model {
  ltshap::Model impl;
};

struct lts_explainer {
  const lts_model* model;
  ltshap::Basis basis;
};

namespace {

thread_local std::string g_last_error;

lts_status to_status(ltshap::Errc c) {
  using ltshap::Errc;
  switch (c) {
  case Errc::invalid_argument: return LTS_ERR_INVALID_ARGUMENT;
  case Errc::parse: return LTS_ERR_PARSE;
  case Errc::validation: return LTS_ERR_VALIDATION;
  case Errc::unsupported: return LTS_ERR_UNSUPPORTED;
  case Errc::numeric: return LTS_ERR_NUMERIC;
  case Errc::io: return LTS_ERR_IO;
  case Errc::internal: return LTS_ERR_INTERNAL;
  }
  return LTS_ERR_INTERNAL;
}

lts_status set_error(lts_status s, const char* msg) {
  g_last_error = msg ? msg : "";
  return s;
}

template <class Fn>
lts_status guarded(Fn&& fn) {
  try {
    fn();
    return LTS_OK;
  } catch (const ltshap::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(LTS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(LTS_ERR_INTERNAL, e.what());
  }
}

bool valid_method(lts_method m) {
  return m == LTS_METHOD_FUSED || m == LTS_METHOD_TWO_PASS || m == LTS_METHOD_COEFF_REF ||
         m == LTS_METHOD_PER_RULE || m == LTS_METHOD_BRUTE_FORCE;
}

ltshap::Method to_method(lts_method m) {
  switch (m) {
  case LTS_METHOD_FUSED: return ltshap::Method::kFused;
  case LTS_METHOD_TWO_PASS: return ltshap::Method::kTwoPass;
  case LTS_METHOD_COEFF_REF: return ltshap::Method::kCoeffRef;
  case LTS_METHOD_PER_RULE: return ltshap::Method::kPerRule;
  default: return ltshap::Method::kBruteForce;
  }
}

} // namespace

extern "C" {

lts_status lts_model_load_string(const char* json, size_t len, lts_model** out) {
  if (!json || !out)
    return set_error(LTS_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<lts_model>();
    m->impl = ltshap::parse_model(std::string_view(json, len));
    *out = m.release();
  });
}

lts_status lts_model_load_file(const char* path, lts_model** out) {
  if (!path || !out)
    return set_error(LTS_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<lts_model>();
    m->impl = ltshap::load_model_file(path);
    *out = m.release();
  });
}

lts_status lts_model_generate_random(int num_features, int target_leaves, int max_depth,
                                     int spine, int distinct_path_features, uint64_t seed,
                                     lts_model** out) {
  if (!out)
    return set_error(LTS_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    ltshap::GenParams p;
    p.num_features = num_features;
    p.target_leaves = target_leaves;
    p.max_depth = max_depth;
    p.spine = spine;
    p.distinct_path_features = distinct_path_features != 0;
    p.seed = seed;
    auto m = std::make_unique<lts_model>();
    m->impl = ltshap::generate_random_model(p);
    *out = m.release();
  });
}

void lts_model_free(lts_model* model) { delete model; }

int lts_model_num_features(const lts_model* model) {
  return model ? model->impl.num_features : -1;
}

int lts_model_num_trees(const lts_model* model) {
  return model ? static_cast<int>(model->impl.trees.size()) : -1;
}

int lts_model_max_degree(const lts_model* model) {
  return model ? model->impl.max_degree() : -1;
}

double lts_model_base_value(const lts_model* model) {
  return model ? model->impl.base_value() : 0.0;
}

const char* lts_model_feature_name(const lts_model* model, int i) {
  if (!model || i < 0 || static_cast<size_t>(i) >= model->impl.feature_names.size())
    return nullptr;
  return model->impl.feature_names[i].c_str();
}

lts_status lts_model_to_json(const lts_model* model, char** out) {
  if (!model || !out)
    return set_error(LTS_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const std::string s = ltshap::model_to_json(model->impl);
    char* buf = static_cast<char*>(::operator new(s.size() + 1));
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out = buf;
  });
}

void lts_string_free(char* s) { ::operator delete(s); }

lts_status lts_predict(const lts_model* model, const double* x, size_t n, double* out) {
  if (!model || !out || (!x && n > 0))
    return set_error(LTS_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = ltshap::predict(model->impl, {x, n}); });
}

lts_status lts_explainer_create(const lts_model* model, lts_explainer** out) {
  if (!model || !out)
    return set_error(LTS_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new lts_explainer{model, ltshap::Basis(model->impl.max_degree())};
  });
}

void lts_explainer_free(lts_explainer* ex) { delete ex; }

lts_status lts_explain_method(lts_explainer* ex, lts_method method, const double* x, size_t n,
                              double* phi, double* base, double* prediction) {
  if (!ex || !phi || (!x && n > 0))
    return set_error(LTS_ERR_INVALID_ARGUMENT, "null argument");
  if (!valid_method(method))
    return set_error(LTS_ERR_INVALID_ARGUMENT, "unknown method");
  return guarded([&] {
    const ltshap::Attribution a =
        ltshap::explain(ex->model->impl, ex->basis, {x, n}, to_method(method));
    std::memcpy(phi, a.phi.data(), a.phi.size() * sizeof(double));
    if (base)
      *base = a.base_value;
    if (prediction)
      *prediction = a.prediction;
  });
}

lts_status lts_explain(lts_explainer* ex, const double* x, size_t n, double* phi, double* base,
                       double* prediction) {
  return lts_explain_method(ex, LTS_METHOD_FUSED, x, n, phi, base, prediction);
}

lts_status lts_explain_batch(lts_explainer* ex, lts_method method, const double* X, size_t rows,
                             size_t n, int threads, double* phi, double* base, double* prediction,
                             int* row_status) {
  if (!ex || (rows > 0 && (!X || !phi)))
    return set_error(LTS_ERR_INVALID_ARGUMENT, "null argument");
  if (!valid_method(method))
    return set_error(LTS_ERR_INVALID_ARGUMENT, "unknown method");
  lts_status first_bad = LTS_OK;
  const lts_status s = guarded([&] {
    const ltshap::BatchResult r =
        ltshap::explain_batch(ex->model->impl, ex->basis, X, rows, n, threads, to_method(method));
    std::string first_msg;
    for (size_t i = 0; i < rows; ++i) {
      const lts_status rs = r.status[i].ok ? LTS_OK : to_status(r.status[i].code);
      if (row_status)
        row_status[i] = rs;
      if (r.status[i].ok) {
        std::memcpy(phi + i * n, r.rows[i].phi.data(), n * sizeof(double));
        if (base)
          base[i] = r.rows[i].base_value;
        if (prediction)
          prediction[i] = r.rows[i].prediction;
      } else if (first_bad == LTS_OK) {
        first_bad = rs;
        first_msg = "row " + std::to_string(i) + ": " + r.status[i].message;
      }
    }
    if (first_bad != LTS_OK)
      set_error(first_bad, first_msg.c_str());
  });
  if (s != LTS_OK)
    return s;
  return first_bad;
}

const char* lts_last_error(void) { return g_last_error.c_str(); }

const char* lts_status_name(lts_status s) {
  switch (s) {
  case LTS_OK: return "ok";
  case LTS_ERR_INVALID_ARGUMENT: return "invalid argument";
  case LTS_ERR_PARSE: return "parse error";
  case LTS_ERR_VALIDATION: return "validation error";
  case LTS_ERR_UNSUPPORTED: return "unsupported";
  case LTS_ERR_NUMERIC: return "numeric error";
  case LTS_ERR_IO: return "io error";
  case LTS_ERR_INTERNAL: return "internal error";
  }
  return "unknown";
}

const char* lts_version(void) { return "0.1.0"; }

} // extern "C"
