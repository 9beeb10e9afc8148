// SPDX-License-Identifier: Apache-2.0
//
// rmt_irs: ergodic-rate analysis and optimization for IRS-aided MIMO links
// over double-scattering channels.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RMT_IRS_HARNESS_CONFIG_HPP
#define RMT_IRS_HARNESS_CONFIG_HPP

#include "../channel_model.hpp"
#include "../det_equiv.hpp"
#include "../optimize.hpp"
#include "../types.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmt_irs::harness
{
    using json = nlohmann::json;

    // Invalid or unreadable experiment configuration (CLI exit code 1).
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    inline constexpr std::array<const char *, 6> correlation_roles{"r1", "s1", "d1", "r2", "s2", "d2"};
    inline constexpr std::array<const char *, 5> known_methods{"mc", "da", "ao", "ao_mc", "rayleigh_mc"};
    inline constexpr const char *noise_convention_p_over_sigma2 = "p_over_sigma2";

    // How one of the six correlation matrices is produced.
    struct MatrixSpec
    {
        enum class Kind
        {
            angular,
            identity,
            explicit_matrix
        };
        Kind kind = Kind::angular;
        double phi = std::numbers::pi / 7.0;
        double d = 25.0;
        std::optional<int> n_paths; ///< unset: the scatterer count of the matrix's link
        CMatrix matrix;             ///< explicit_matrix only
    };

    struct VarySpec
    {
        std::string param; ///< n_r1, n_s1, n_d1, n_s2, n_d2 or n_s (both scatterer counts)
        std::vector<int> values;
    };

    struct ExperimentConfig
    {
        std::string name = "experiment";
        SystemDims dims;
        std::array<MatrixSpec, 6> correlation; ///< r1, s1, d1, r2, s2, d2
        std::optional<VarySpec> vary;
        std::vector<double> snr_db;
        double power = 1.0;
        std::string noise_convention = noise_convention_p_over_sigma2;
        std::size_t trials = 2000;
        std::uint64_t seed = 1;
        std::vector<std::string> methods{"da", "mc"};
        AoConfig optimizer;
        FixedPointOptions fixed_point;
        std::string output = "sweep.csv";

        // sigma^2 = P / 10^(snr_db / 10)
        double noise_var(double snr) const { return power / std::pow(10.0, snr / 10.0); }

        bool has_method(const std::string &m) const
        {
            return std::find(methods.begin(), methods.end(), m) != methods.end();
        }
    };

    namespace detail
    {
        [[noreturn]] inline void field_error(const std::string &field, const std::string &what)
        {
            throw ConfigError("config field '" + field + "': " + what);
        }

        inline const json *find(const json &obj, const char *key)
        {
            auto it = obj.find(key);
            return it == obj.end() || it->is_null() ? nullptr : &*it;
        }

        inline double get_number(const json &v, const std::string &field)
        {
            if (!v.is_number())
                field_error(field, "expected a number");
            return v.get<double>();
        }

        inline long long get_integer(const json &v, const std::string &field)
        {
            if (!v.is_number_integer())
                field_error(field, "expected an integer");
            return v.get<long long>();
        }

        inline int get_positive_int(const json &v, const std::string &field)
        {
            const long long x = get_integer(v, field);
            if (x < 1 || x > 1'000'000)
                field_error(field, "expected a positive integer");
            return static_cast<int>(x);
        }

        inline std::string get_string(const json &v, const std::string &field)
        {
            if (!v.is_string())
                field_error(field, "expected a string");
            return v.get<std::string>();
        }

        inline CMatrix matrix_from_json(const json &v, const std::string &field)
        {
            if (!v.is_object() || !v.contains("re"))
                field_error(field, "explicit matrix needs an 're' array (and optional 'im')");
            auto rows_of = [&](const json &a, const std::string &f)
            {
                if (!a.is_array() || a.empty())
                    field_error(f, "expected a non-empty array of rows");
                const std::size_t n = a.size();
                Eigen::MatrixXd m(n, n);
                for (std::size_t r = 0; r < n; ++r)
                {
                    if (!a[r].is_array() || a[r].size() != n)
                        field_error(f, "expected a square matrix");
                    for (std::size_t c = 0; c < n; ++c)
                        m(r, c) = get_number(a[r][c], f);
                }
                return m;
            };
            const Eigen::MatrixXd re = rows_of(v.at("re"), field + ".re");
            Eigen::MatrixXd im = Eigen::MatrixXd::Zero(re.rows(), re.cols());
            if (const json *j = find(v, "im"))
            {
                im = rows_of(*j, field + ".im");
                if (im.rows() != re.rows())
                    field_error(field, "'re' and 'im' dimensions differ");
            }
            CMatrix m(re.rows(), re.cols());
            m.real() = re;
            m.imag() = im;
            return m;
        }

        inline json matrix_to_json(const CMatrix &m)
        {
            json re = json::array(), im = json::array();
            for (Eigen::Index r = 0; r < m.rows(); ++r)
            {
                json rr = json::array(), ri = json::array();
                for (Eigen::Index c = 0; c < m.cols(); ++c)
                {
                    rr.push_back(m(r, c).real());
                    ri.push_back(m(r, c).imag());
                }
                re.push_back(rr);
                im.push_back(ri);
            }
            return {{"re", re}, {"im", im}};
        }

        inline MatrixSpec matrix_spec_from_json(const json &v, const std::string &field, const MatrixSpec &fallback)
        {
            MatrixSpec s = fallback;
            if (v.is_string())
            {
                if (v.get<std::string>() != "identity")
                    field_error(field, "the only string value accepted is \"identity\"");
                s.kind = MatrixSpec::Kind::identity;
                return s;
            }
            if (!v.is_object())
                field_error(field, "expected an object or \"identity\"");
            if (v.contains("re"))
            {
                s.kind = MatrixSpec::Kind::explicit_matrix;
                s.matrix = matrix_from_json(v, field);
                return s;
            }
            s.kind = MatrixSpec::Kind::angular;
            for (auto it = v.begin(); it != v.end(); ++it)
            {
                const std::string key = it.key();
                if (key == "phi")
                {
                    s.phi = get_number(*it, field + ".phi");
                    if (!(s.phi > 0.0 && s.phi < 2.0 * std::numbers::pi))
                        field_error(field + ".phi", "angular spread must lie in (0, 2 pi)");
                }
                else if (key == "d")
                {
                    s.d = get_number(*it, field + ".d");
                    if (!(s.d > 0.0))
                        field_error(field + ".d", "antenna spacing must be > 0");
                }
                else if (key == "n_paths")
                {
                    if (it->is_null())
                        s.n_paths.reset();
                    else
                    {
                        s.n_paths = get_positive_int(*it, field + ".n_paths");
                        if (*s.n_paths < 2)
                            field_error(field + ".n_paths", "must be >= 2");
                    }
                }
                else
                    field_error(field + "." + key, "unknown key");
            }
            return s;
        }

        inline json matrix_spec_to_json(const MatrixSpec &s)
        {
            switch (s.kind)
            {
            case MatrixSpec::Kind::identity:
                return "identity";
            case MatrixSpec::Kind::explicit_matrix:
                return matrix_to_json(s.matrix);
            case MatrixSpec::Kind::angular:
                break;
            }
            json j{{"phi", s.phi}, {"d", s.d}};
            j["n_paths"] = s.n_paths ? json(*s.n_paths) : json(nullptr);
            return j;
        }

        inline json read_json_file(const std::filesystem::path &path)
        {
            std::ifstream in(path);
            if (!in)
                throw ConfigError("cannot open '" + path.string() + "'");
            try
            {
                return json::parse(in);
            }
            catch (const json::parse_error &e)
            {
                throw ConfigError("'" + path.string() + "': " + e.what());
            }
        }

        inline int &dim_ref(SystemDims &d, const std::string &name)
        {
            if (name == "n_r1")
                return d.n_r1;
            if (name == "n_s1")
                return d.n_s1;
            if (name == "n_d1")
                return d.n_d1;
            if (name == "n_s2")
                return d.n_s2;
            if (name == "n_d2")
                return d.n_d2;
            throw ConfigError("unknown dimension '" + name + "'");
        }

        inline std::uint64_t fnv1a64(const std::string &s)
        {
            std::uint64_t h = 0xcbf29ce484222325ULL;
            for (unsigned char c : s)
            {
                h ^= c;
                h *= 0x100000001b3ULL;
            }
            return h;
        }
    } // namespace detail

    // Default angular parameters: phi = pi/7 for receive/transmit sides,
    // pi/16 for scatterers, spacing 25 wavelengths, N = scatterer count.
    inline std::array<MatrixSpec, 6> default_correlation()
    {
        std::array<MatrixSpec, 6> c;
        for (int i = 0; i < 6; ++i)
        {
            c[i].kind = MatrixSpec::Kind::angular;
            c[i].phi = (i == 1 || i == 4) ? std::numbers::pi / 16.0 : std::numbers::pi / 7.0;
            c[i].d = 25.0;
        }
        return c;
    }

    inline json to_json(const ExperimentConfig &cfg)
    {
        json j;
        j["name"] = cfg.name;
        j["dims"] = {{"n_r1", cfg.dims.n_r1}, {"n_s1", cfg.dims.n_s1}, {"n_d1", cfg.dims.n_d1},
                     {"n_s2", cfg.dims.n_s2}, {"n_d2", cfg.dims.n_d2}};
        json corr;
        for (int i = 0; i < 6; ++i)
            corr[correlation_roles[i]] = detail::matrix_spec_to_json(cfg.correlation[i]);
        j["correlation"] = corr;
        if (cfg.vary)
            j["vary"] = {{"param", cfg.vary->param}, {"values", cfg.vary->values}};
        j["snr_db"] = cfg.snr_db;
        j["power"] = cfg.power;
        j["noise_convention"] = cfg.noise_convention;
        j["trials"] = cfg.trials;
        j["seed"] = cfg.seed;
        j["methods"] = cfg.methods;
        const AoConfig &o = cfg.optimizer;
        j["optimizer"] = {{"armijo_c", o.armijo_c}, {"shrink", o.shrink}, {"max_outer", o.max_outer},
                          {"max_ls", o.max_ls}, {"conv_tol", o.conv_tol}, {"initial_step", o.initial_step}};
        j["fixed_point"] = {{"tol", cfg.fixed_point.tol}, {"max_iter", cfg.fixed_point.max_iter},
                            {"method", cfg.fixed_point.method == FixedPointMethod::jacobi ? "jacobi" : "product_bracket"}};
        j["output"] = cfg.output;
        return j;
    }

    // Parses a configuration document. `base_dir` resolves relative file references.
    inline ExperimentConfig from_json(const json &j, const std::filesystem::path &base_dir = {})
    {
        using namespace detail;
        if (!j.is_object())
            throw ConfigError("config root must be a JSON object");

        ExperimentConfig cfg;
        cfg.correlation = default_correlation();
        static const std::vector<std::string> keys{"name", "dims", "correlation", "vary", "snr_db", "power",
                                                   "noise_convention", "trials", "seed", "methods", "optimizer",
                                                   "fixed_point", "output"};
        for (auto it = j.begin(); it != j.end(); ++it)
            if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
                field_error(it.key(), "unknown key");

        if (const json *v = find(j, "name"))
            cfg.name = get_string(*v, "name");

        const json *dims = find(j, "dims");
        if (!dims || !dims->is_object())
            field_error("dims", "required object with n_r1, n_s1, n_d1, n_s2, n_d2");
        for (const char *k : {"n_r1", "n_s1", "n_d1", "n_s2", "n_d2"})
        {
            const json *v = find(*dims, k);
            if (!v)
                field_error(std::string("dims.") + k, "missing");
            dim_ref(cfg.dims, k) = get_positive_int(*v, std::string("dims.") + k);
        }

        if (const json *corr = find(j, "correlation"))
        {
            if (!corr->is_object())
                field_error("correlation", "expected an object");
            json merged = *corr;
            if (const json *file = find(*corr, "file"))
            {
                const std::filesystem::path p = base_dir / get_string(*file, "correlation.file");
                if (!std::filesystem::exists(p))
                    field_error("correlation.file", "file '" + p.string() + "' does not exist");
                const json loaded = read_json_file(p);
                if (!loaded.is_object())
                    field_error("correlation.file", "file must hold a JSON object");
                merged = loaded;
                for (auto it = corr->begin(); it != corr->end(); ++it)
                    if (it.key() != "file")
                        merged[it.key()] = *it;
            }
            for (auto it = merged.begin(); it != merged.end(); ++it)
            {
                auto role = std::find(correlation_roles.begin(), correlation_roles.end(), it.key());
                if (role == correlation_roles.end())
                    field_error("correlation." + it.key(), "unknown matrix role (expected r1, s1, d1, r2, s2, d2)");
                const auto idx = std::distance(correlation_roles.begin(), role);
                cfg.correlation[idx] = matrix_spec_from_json(*it, "correlation." + it.key(), cfg.correlation[idx]);
            }
        }

        if (const json *v = find(j, "vary"))
        {
            VarySpec vs;
            if (!v->is_object())
                field_error("vary", "expected an object with 'param' and 'values'");
            vs.param = get_string(v->value("param", json()), "vary.param");
            if (vs.param != "n_s")
            {
                SystemDims probe;
                try
                {
                    (void)dim_ref(probe, vs.param);
                }
                catch (const ConfigError &)
                {
                    field_error("vary.param", "expected one of n_r1, n_s1, n_d1, n_s2, n_d2, n_s");
                }
            }
            const json vals = v->value("values", json());
            if (!vals.is_array() || vals.empty())
                field_error("vary.values", "expected a non-empty array");
            for (std::size_t i = 0; i < vals.size(); ++i)
                vs.values.push_back(get_positive_int(vals[i], "vary.values[" + std::to_string(i) + "]"));
            cfg.vary = vs;
        }

        const json *snr = find(j, "snr_db");
        if (!snr || !snr->is_array() || snr->empty())
            field_error("snr_db", "required non-empty array of numbers");
        for (std::size_t i = 0; i < snr->size(); ++i)
            cfg.snr_db.push_back(get_number((*snr)[i], "snr_db[" + std::to_string(i) + "]"));

        if (const json *v = find(j, "power"))
        {
            cfg.power = get_number(*v, "power");
            if (!(cfg.power > 0.0))
                field_error("power", "must be > 0");
        }
        if (const json *v = find(j, "noise_convention"))
        {
            cfg.noise_convention = get_string(*v, "noise_convention");
            if (cfg.noise_convention != noise_convention_p_over_sigma2)
                field_error("noise_convention", "only \"p_over_sigma2\" (SNR = P / sigma^2) is supported");
        }
        if (const json *v = find(j, "trials"))
            cfg.trials = static_cast<std::size_t>(get_positive_int(*v, "trials"));
        if (const json *v = find(j, "seed"))
        {
            if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
                field_error("seed", "expected a non-negative integer");
            cfg.seed = v->get<std::uint64_t>();
        }
        if (const json *v = find(j, "methods"))
        {
            if (!v->is_array() || v->empty())
                field_error("methods", "expected a non-empty array");
            cfg.methods.clear();
            for (std::size_t i = 0; i < v->size(); ++i)
            {
                const std::string m = get_string((*v)[i], "methods[" + std::to_string(i) + "]");
                if (std::find(known_methods.begin(), known_methods.end(), m) == known_methods.end())
                    field_error("methods[" + std::to_string(i) + "]", "unknown method '" + m + "'");
                if (cfg.has_method(m))
                    field_error("methods[" + std::to_string(i) + "]", "duplicate method '" + m + "'");
                cfg.methods.push_back(m);
            }
        }
        if (const json *v = find(j, "optimizer"))
        {
            if (!v->is_object())
                field_error("optimizer", "expected an object");
            AoConfig &o = cfg.optimizer;
            for (auto it = v->begin(); it != v->end(); ++it)
            {
                const std::string f = "optimizer." + it.key();
                if (it.key() == "armijo_c")
                    o.armijo_c = get_number(*it, f);
                else if (it.key() == "shrink")
                    o.shrink = get_number(*it, f);
                else if (it.key() == "max_outer")
                    o.max_outer = get_positive_int(*it, f);
                else if (it.key() == "max_ls")
                    o.max_ls = get_positive_int(*it, f);
                else if (it.key() == "conv_tol")
                    o.conv_tol = get_number(*it, f);
                else if (it.key() == "initial_step")
                    o.initial_step = get_number(*it, f);
                else
                    field_error(f, "unknown key");
            }
            try
            {
                o.validate();
            }
            catch (const std::invalid_argument &e)
            {
                field_error("optimizer", e.what());
            }
        }
        if (const json *v = find(j, "fixed_point"))
        {
            if (!v->is_object())
                field_error("fixed_point", "expected an object");
            for (auto it = v->begin(); it != v->end(); ++it)
            {
                const std::string f = "fixed_point." + it.key();
                if (it.key() == "tol")
                {
                    cfg.fixed_point.tol = get_number(*it, f);
                    if (!(cfg.fixed_point.tol > 0.0))
                        field_error(f, "must be > 0");
                }
                else if (it.key() == "max_iter")
                    cfg.fixed_point.max_iter = get_positive_int(*it, f);
                else if (it.key() == "method")
                {
                    const std::string m = get_string(*it, f);
                    if (m == "jacobi")
                        cfg.fixed_point.method = FixedPointMethod::jacobi;
                    else if (m == "product_bracket")
                        cfg.fixed_point.method = FixedPointMethod::product_bracket;
                    else
                        field_error(f, "expected \"product_bracket\" or \"jacobi\"");
                }
                else
                    field_error(f, "unknown key");
            }
        }
        if (const json *v = find(j, "output"))
            cfg.output = get_string(*v, "output");
        return cfg;
    }

    inline ExperimentConfig load_config(const std::filesystem::path &path)
    {
        return from_json(detail::read_json_file(path), path.parent_path());
    }

    inline ExperimentConfig parse_config(const std::string &text, const std::filesystem::path &base_dir = {})
    {
        json j;
        try
        {
            j = json::parse(text);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError(e.what());
        }
        return from_json(j, base_dir);
    }

    // Identity of a single (non-varied) configuration. Covers every field that
    // changes a row's value; the SNR list, method set, name and output path are excluded.
    inline std::string config_hash(const ExperimentConfig &cfg)
    {
        json j = to_json(cfg);
        j.erase("snr_db");
        j.erase("output");
        j.erase("vary");
        j.erase("name");
        j.erase("methods");
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a64(j.dump())));
        return buf;
    }

    inline std::uint64_t config_hash_value(const ExperimentConfig &cfg)
    {
        return std::stoull(config_hash(cfg), nullptr, 16);
    }

    // One configuration per value of the vary axis (or the config itself).
    inline std::vector<ExperimentConfig> expand(const ExperimentConfig &cfg)
    {
        if (!cfg.vary)
            return {cfg};
        std::vector<ExperimentConfig> out;
        const std::filesystem::path outp(cfg.output);
        for (int v : cfg.vary->values)
        {
            ExperimentConfig c = cfg;
            c.vary.reset();
            if (cfg.vary->param == "n_s")
                c.dims.n_s1 = c.dims.n_s2 = v;
            else
                detail::dim_ref(c.dims, cfg.vary->param) = v;
            const std::string suffix = "_" + cfg.vary->param + "_" + std::to_string(v);
            c.name = cfg.name + suffix;
            c.output = (outp.parent_path() / (outp.stem().string() + suffix + outp.extension().string())).string();
            out.push_back(std::move(c));
        }
        return out;
    }

    // Materializes the six correlation matrices for a single configuration.
    inline CorrelationProfile build_profile(const ExperimentConfig &cfg)
    {
        const SystemDims &d = cfg.dims;
        const std::array<int, 6> dims{d.n_r1, d.n_s1, d.n_d1, d.n_d1, d.n_s2, d.n_d2};
        const std::array<int, 6> scatterers{d.n_s1, d.n_s1, d.n_s1, d.n_s2, d.n_s2, d.n_s2};
        std::array<CMatrix, 6> m;
        for (int i = 0; i < 6; ++i)
        {
            const MatrixSpec &s = cfg.correlation[i];
            const std::string field = std::string("correlation.") + correlation_roles[i];
            switch (s.kind)
            {
            case MatrixSpec::Kind::identity:
                m[i] = CMatrix::Identity(dims[i], dims[i]);
                break;
            case MatrixSpec::Kind::explicit_matrix:
                if (s.matrix.rows() != dims[i])
                    detail::field_error(field, "explicit matrix is " + std::to_string(s.matrix.rows()) +
                                                   "x" + std::to_string(s.matrix.rows()) + ", expected " +
                                                   std::to_string(dims[i]));
                m[i] = s.matrix;
                break;
            case MatrixSpec::Kind::angular:
            {
                const int n_paths = s.n_paths ? *s.n_paths : scatterers[i];
                if (n_paths < 2)
                    detail::field_error(field + ".n_paths",
                                        "defaults to the scatterer count, which is < 2; set it explicitly");
                m[i] = build_correlation({s.phi, dims[i], n_paths, s.d});
                break;
            }
            }
        }
        CorrelationProfile p{m[0], m[1], m[2], m[3], m[4], m[5]};
        try
        {
            p.validate(d);
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(std::string("correlation: ") + e.what());
        }
        return p;
    }

    // Built-in experiment presets: fig2, fig3, fig4.
    inline ExperimentConfig preset(const std::string &name)
    {
        ExperimentConfig c;
        c.name = name;
        c.correlation = default_correlation();
        c.power = 1.0;
        c.trials = 2000;
        c.seed = 1;
        if (name == "fig2")
        {
            // DA vs Monte Carlo; endpoint dims fixed at 5, IRS size swept.
            c.dims = {5, 5, 5, 5, 5};
            c.vary = VarySpec{"n_d1", {5, 15, 25, 75}};
            c.snr_db = {0, 5, 10, 15, 20};
            c.methods = {"da", "mc"};
            c.optimizer.armijo_c = 0.005;
        }
        else if (name == "fig3")
        {
            // Rank deficiency: n = 15, n_S in {3, 7, 15}, plus the Rayleigh baseline.
            c.dims = {15, 15, 15, 15, 15};
            c.vary = VarySpec{"n_s", {3, 7, 15}};
            c.snr_db = {0, 5, 10, 15, 20, 25};
            c.methods = {"da", "mc", "rayleigh_mc"};
            c.optimizer.armijo_c = 0.005;
        }
        else if (name == "fig4")
        {
            // Optimized vs unoptimized: n = 9, n_S in {3, 5, 9}, c = 0.0005.
            c.dims = {9, 9, 9, 9, 9};
            c.vary = VarySpec{"n_s", {3, 5, 9}};
            c.snr_db = {0, 5, 10, 15, 20, 25, 30};
            c.methods = {"da", "mc", "ao", "ao_mc"};
            c.optimizer.armijo_c = 0.0005;
        }
        else
            throw ConfigError("unknown preset '" + name + "' (expected fig2, fig3 or fig4)");
        c.optimizer.shrink = 0.5;
        c.output = name + ".csv";
        return c;
    }
} // namespace rmt_irs::harness

#endif // RMT_IRS_HARNESS_CONFIG_HPP
