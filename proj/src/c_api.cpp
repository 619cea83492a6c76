#include "funglm/funglm.h"

#include <optional>
#include <string>

#include "funglm/harness.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

}  // namespace

struct funglm_config {
    funglm::ExperimentConfig cfg;
    std::optional<funglm::HarnessMode> mode;
};

struct funglm_report {
    funglm::RunReport rep;
};

extern "C" {

const char* funglm_version(void) { return "0.1.0"; }

const char* funglm_last_error(void) { return g_last_error.c_str(); }

funglm_status funglm_config_load(const char* json_path, funglm_config** out_cfg) {
    if (!json_path || !out_cfg) {
        set_error("null argument");
        return FUNGLM_ERR_BAD_ARG;
    }
    try {
        auto* h = new funglm_config{funglm::load_config(json_path), std::nullopt};
        *out_cfg = h;
        return FUNGLM_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return FUNGLM_ERR_CONFIG;
    }
}

funglm_status funglm_config_parse(const char* json_text, funglm_config** out_cfg) {
    if (!json_text || !out_cfg) {
        set_error("null argument");
        return FUNGLM_ERR_BAD_ARG;
    }
    try {
        auto* h = new funglm_config{funglm::parse_config(json_text), std::nullopt};
        *out_cfg = h;
        return FUNGLM_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return FUNGLM_ERR_CONFIG;
    }
}

funglm_status funglm_config_set_mode(funglm_config* cfg, const char* mode) {
    if (!cfg || !mode) {
        set_error("null argument");
        return FUNGLM_ERR_BAD_ARG;
    }
    try {
        cfg->mode = funglm::parse_mode(mode);
        return FUNGLM_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return FUNGLM_ERR_CONFIG;
    }
}

funglm_status funglm_config_set_seed(funglm_config* cfg, uint64_t seed) {
    if (!cfg) {
        set_error("null argument");
        return FUNGLM_ERR_BAD_ARG;
    }
    cfg->cfg.seed = seed;
    return FUNGLM_OK;
}

funglm_status funglm_config_set_out_dir(funglm_config* cfg, const char* dir) {
    if (!cfg || !dir) {
        set_error("null argument");
        return FUNGLM_ERR_BAD_ARG;
    }
    cfg->cfg.out_dir = dir;
    return FUNGLM_OK;
}

void funglm_config_free(funglm_config* cfg) { delete cfg; }

funglm_status funglm_run(const funglm_config* cfg, funglm_report** out_report) {
    if (!cfg || !out_report) {
        set_error("null argument");
        return FUNGLM_ERR_BAD_ARG;
    }
    if (!cfg->mode) {
        set_error("config error: harness mode not set");
        return FUNGLM_ERR_CONFIG;
    }
    try {
        auto* h = new funglm_report{funglm::run(cfg->cfg, *cfg->mode)};
        *out_report = h;
        return FUNGLM_OK;
    } catch (const std::invalid_argument& e) {
        set_error(e.what());
        return FUNGLM_ERR_CONFIG;
    } catch (const std::exception& e) {
        set_error(e.what());
        return FUNGLM_ERR_RUNTIME;
    }
}

int funglm_report_all_passed(const funglm_report* rep) {
    return (rep && rep->rep.all_passed) ? 1 : 0;
}

int funglm_report_assertion_count(const funglm_report* rep) {
    return rep ? static_cast<int>(rep->rep.assertions.size()) : 0;
}

funglm_status funglm_report_assertion(const funglm_report* rep, int index, const char** name,
                                      double* value, double* bound, int* pass) {
    if (!rep || index < 0 || index >= static_cast<int>(rep->rep.assertions.size())) {
        set_error("bad report index");
        return FUNGLM_ERR_BAD_ARG;
    }
    const auto& a = rep->rep.assertions[index];
    if (name) *name = a.name.c_str();
    if (value) *value = a.value;
    if (bound) *bound = a.bound;
    if (pass) *pass = a.pass ? 1 : 0;
    return FUNGLM_OK;
}

const char* funglm_report_summary_json(const funglm_report* rep) {
    return rep ? rep->rep.summary_json.c_str() : "";
}

void funglm_report_free(funglm_report* rep) { delete rep; }

}  // extern "C"
