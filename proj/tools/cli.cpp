// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <openssl/rand.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "poa/adjudicator.hpp"
#include "poa/errors.hpp"
#include "poa/forger_lab.hpp"
#include "poa/remote.hpp"
#include "poa/studies.hpp"

namespace poa::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kConfigName = "poa.json";

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("malformed " + what + " JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + path.string());
    out << text;
}

Digest32 os_entropy() {
    Digest32 out{};
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) throw Error("OS randomness unavailable");
    return out;
}

// Reproducible stand-in for OS randomness, keyed by a --seed value.
Digest32 seeded_bytes(const std::string& seed_hex, std::string_view label) {
    Bytes material = from_hex(seed_hex);
    material.insert(material.end(), label.begin(), label.end());
    return sha3_256(material);
}

Seed32 lab_root(const std::string& seed_hex) {
    if (seed_hex.empty()) return Seed32{sha3_256(as_bytes("poa-lab"))};
    Bytes raw = from_hex(seed_hex);
    if (raw.size() == 32) {
        Seed32 s;
        std::copy(raw.begin(), raw.end(), s.bytes.begin());
        return s;
    }
    return Seed32{sha3_256(raw)};
}

Identity require_identity(const WorkspaceConfig& ws, const std::string& key) {
    IdentityRegistry registry(ws.registry);
    auto found = registry.find(key);
    if (!found) throw UnknownIdentity("no registered identity matches '" + key + "'");
    return *found;
}

AffineParams parse_transform(const std::string& arg) {
    if (arg.empty()) return {};
    std::string text = arg;
    auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') text = read_text(arg);
    nlohmann::json j = parse_json_text(text, "transform");
    try {
        AffineParams t = affine_from_json(j);
        check_invertible(t);
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed transform JSON: ") + e.what());
    } catch (const FormatError& e) {
        throw UsageError(std::string("malformed transform JSON: ") + e.what());
    }
}

bool is_png(const Bytes& bytes) {
    static constexpr std::uint8_t kMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return bytes.size() >= 8 && std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin());
}

// POAL latents are recognised by matching the claim's latent shape; any
// other POAL payload is treated as an image.
ContestedObject read_contested(const fs::path& path, const Shape3& latent_shape) {
    Bytes bytes = read_file(path.string());
    if (is_png(bytes)) return PngBytes{std::move(bytes)};
    PoalPayload payload = decode_poal(bytes);
    if (payload.dims.size() != 3) throw FormatError("contested POAL file must be 3-dimensional");
    Shape3 shape{static_cast<int>(payload.dims[0]), static_cast<int>(payload.dims[1]),
                 static_cast<int>(payload.dims[2])};
    if (shape == latent_shape) return Latent(shape, std::move(payload.values));
    return Image(shape, std::move(payload.values));
}

nlohmann::json report_summary(const AdjudicationReport& report) {
    return {
        {"T", report.score},
        {"n", report.n},
        {"q_hat", report.q_hat},
        {"q_hat_log2", report.log_q_hat / std::log(2.0)},
        {"q_upper_log2", report.log_q_upper() / std::log(2.0)},
        {"ks", report.ks},
        {"fitted", gennorm_to_json(report.fitted)},
    };
}

lab::StudyConfig study_config(const WorkspaceConfig& ws, const std::string& seed_hex, int timesteps,
                              std::ostream& err, bool progress) {
    lab::StudyConfig config;
    config.m.latent_shape = ws.latent_shape;
    config.m.timesteps = timesteps;
    config.root = lab_root(seed_hex);
    config.parallelism = ws.parallelism;
    if (progress) config.progress = [&err](const std::string& line) { err << line << '\n'; };
    return config;
}

SurrogateBackend& require_surrogate(Backend& backend, const std::string& command) {
    auto* surrogate = dynamic_cast<SurrogateBackend*>(&backend);
    if (!surrogate) throw UsageError(command + " needs the surrogate backend");
    return *surrogate;
}

std::vector<double> parse_probability_list(const std::vector<std::string>& items) {
    std::vector<double> out;
    for (const auto& s : items) out.push_back(parse_probability(s));
    return out;
}

// Global flags shared by every subcommand.
struct Globals {
    std::string workspace;
    int parallelism = 0;
};

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(const std::vector<std::string>& args);

private:
    void emit(const nlohmann::json& j) { out_ << j.dump(2) << '\n'; }
    WorkspaceConfig workspace() const {
        std::optional<fs::path> path;
        if (!globals_.workspace.empty()) path = globals_.workspace;
        WorkspaceConfig ws = load_workspace(path);
        if (globals_.parallelism > 0) ws.parallelism = globals_.parallelism;
        return ws;
    }

    void add_register(CLI::App& app);
    void add_generate(CLI::App& app);
    void add_contend(CLI::App& app);
    void add_lab(CLI::App& app);

    std::ostream& out_;
    std::ostream& err_;
    Globals globals_;
    int exit_code_ = kAccept;
};

void Runner::add_register(CLI::App& app) {
    auto* cmd = app.add_subcommand("register", "Register an author identity");
    auto label = std::make_shared<std::string>();
    auto entropy = std::make_shared<std::string>();
    auto seed = std::make_shared<std::string>();
    cmd->add_option("label", *label, "Public label")->required();
    auto* e = cmd->add_option("--entropy", *entropy, "Identity bytes as 64 hex chars");
    cmd->add_option("--seed", *seed, "Derive the identity bytes from this hex seed")->excludes(e);
    cmd->callback([this, label, entropy, seed] {
        WorkspaceConfig ws = workspace();
        Digest32 bytes = !entropy->empty() ? fixed_from_hex<32>(*entropy)
                         : !seed->empty()  ? seeded_bytes(*seed, "identity")
                                           : os_entropy();
        IdentityRegistry registry(ws.registry);
        Identity id = registry.register_identity(*label, bytes);
        emit({{"id_hex", id.id_hex()}, {"label", id.label}, {"registered_at", id.registered_at}});
    });
}

void Runner::add_generate(CLI::App& app) {
    struct Opts {
        std::string identity, m_file, prompt, embedding, r, seed, out, image_out;
    };
    auto o = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("generate", "Generate a latent bound to an identity and archive its kappa");
    cmd->add_option("--identity", o->identity, "Identity id or label")->required();
    cmd->add_option("--m-file", o->m_file, "JSON meta-parameter record")->required();
    auto* p = cmd->add_option("--prompt", o->prompt, "Prompt text (bound by digest)");
    auto* e = cmd->add_option("--embedding", o->embedding, "Serialized embedding file")->excludes(p);
    cmd->add_option("--r", o->r, "Free bits as 32 hex chars");
    cmd->add_option("--seed", o->seed, "Derive the free bits from this hex seed");
    cmd->add_option("--out", o->out, "Output POAL latent")->required();
    cmd->add_option("--image-out", o->image_out, "Also write the decoded image (POAL)");
    cmd->callback([this, o, p, e] {
        if (p->count() == 0 && e->count() == 0) throw UsageError("one of --prompt or --embedding is required");
        WorkspaceConfig ws = workspace();
        if (!fs::exists(o->m_file)) {
            throw UsageError("m-file not found: " + o->m_file + " (pass --m-file PATH to a JSON meta-parameter record)");
        }
        Identity identity = require_identity(ws, o->identity);
        Kappa kappa;
        kappa.m = meta_from_json(parse_json_text(read_text(o->m_file), "m-file"));
        if (!o->embedding.empty()) {
            Bytes raw = read_file(o->embedding);
            kappa.e_digest = embedding_digest(raw);
            kappa.e_ref = o->embedding;
        } else {
            kappa.e_digest = sha3_256(as_bytes(o->prompt));
            kappa.e_ref = "prompt:" + o->prompt;
        }
        if (!o->r.empty()) {
            kappa.r = fixed_from_hex<16>(o->r);
        } else {
            Digest32 bits = o->seed.empty() ? os_entropy() : seeded_bytes(o->seed, "free-bits");
            std::copy_n(bits.begin(), kappa.r.size(), kappa.r.begin());
        }
        auto backend = ws.make_backend();
        Seed32 seed = derive_seed(identity, kappa);
        Latent latent = backend->generate(kappa.m, kappa.e_digest, seed);
        Bytes poal = latent_to_poal(latent);
        write_file(o->out, poal);
        nlohmann::json result = {
            {"identity_id_hex", identity.id_hex()},
            {"r_hex", to_hex(kappa.r)},
            {"e_digest_hex", to_hex(kappa.e_digest)},
            {"seed_digest_hex", to_hex(sha3_256(seed.bytes))},
            {"latent_path", o->out},
            {"latent_digest_hex", to_hex(latent_digest(latent))},
        };
        if (!o->image_out.empty()) {
            Image image = backend->decode(latent);
            write_file(o->image_out, image_to_poal(image));
            result["image_path"] = o->image_out;
            result["image_digest_hex"] = to_hex(image_digest(image));
        }
        KappaArchive(ws.archive).append(KappaRecord{identity.id_hex(), kappa, utc_timestamp_now()});
        emit(result);
    });
}

void Runner::add_contend(CLI::App& app) {
    struct Opts {
        std::string contested, identity, kappa_r, kappa_file, alpha, delta, transform, p_r, out = "report.json";
    };
    auto o = std::make_shared<Opts>();
    auto* cmd = app.add_subcommand("contend", "Adjudicate a contested object against an archived kappa");
    cmd->add_option("--contested", o->contested, "Contested object: POAL latent or image, or PNG")->required();
    cmd->add_option("--identity", o->identity, "Claimant identity id or label")->required();
    auto* kr = cmd->add_option("--kappa-r", o->kappa_r, "Archived kappa, by free bits hex");
    cmd->add_option("--kappa", o->kappa_file, "Inline kappa JSON file")->excludes(kr);
    cmd->add_option("--alpha", o->alpha, "Interval half-width (default p_r / 2)");
    cmd->add_option("--delta", o->delta, "Failure probability of the estimate");
    cmd->add_option("--transform", o->transform, "Alignment transform: JSON text or file");
    cmd->add_option("--p-r,--p_r", o->p_r, "Rejection threshold, e.g. 2^-50");
    cmd->add_option("--out", o->out, "Report output path");
    cmd->callback([this, o] {
        WorkspaceConfig ws = workspace();
        Identity identity = require_identity(ws, o->identity);
        Kappa kappa;
        if (!o->kappa_file.empty()) {
            kappa = kappa_from_json(parse_json_text(read_text(o->kappa_file), "kappa"));
        } else if (!o->kappa_r.empty()) {
            auto record = KappaArchive(ws.archive).find_by_r(o->kappa_r);
            if (!record) throw UsageError("no archived kappa with r = " + o->kappa_r);
            if (record->identity_id_hex != identity.id_hex()) {
                err_ << "note: archived kappa was created by " << record->identity_id_hex << '\n';
            }
            kappa = record->kappa;
        } else {
            throw UsageError("one of --kappa-r or --kappa is required");
        }
        const double p_r = o->p_r.empty() ? ws.p_r : parse_probability(o->p_r);
        if (!(p_r > 0.0 && p_r < 1.0)) throw UsageError("p_r must lie in (0, 1)");
        ClaimRequest request;
        request.identity = identity;
        request.kappa = kappa;
        request.alpha = !o->alpha.empty() ? parse_probability(o->alpha) : ws.alpha.value_or(p_r / 2.0);
        request.delta = o->delta.empty() ? ws.delta : parse_probability(o->delta);
        request.transform = parse_transform(o->transform);
        request.contested = read_contested(o->contested, kappa.m.latent_shape);

        auto backend = ws.make_backend();
        request.backend = backend->selector();
        AdjudicationReport report = adjudicate(request, *backend, AdjudicatorOptions{ws.parallelism});
        write_text(o->out, report.canonical() + "\n");
        JudgeVerdict verdict = judge(report, p_r);
        nlohmann::json result = report_summary(report);
        result["verdict"] = {{"accept", verdict.accept},
                             {"p_r", verdict.p_r},
                             {"q_upper", verdict.q_upper},
                             {"rationale", verdict.rationale}};
        result["report_path"] = o->out;
        emit(result);
        exit_code_ = verdict.accept ? kAccept : kReject;
    });
}

void Runner::add_lab(CLI::App& app) {
    auto* lab = app.add_subcommand("lab", "Desk-scale studies and security experiments");
    lab->require_subcommand(1);

    struct Common {
        std::string seed;
        int timesteps = 10;
        bool progress = false;
    };
    auto common = std::make_shared<Common>();
    auto add_common = [common](CLI::App* cmd) {
        cmd->add_option("--seed", common->seed, "Root seed (hex)");
        cmd->add_option("--timesteps", common->timesteps, "DDIM steps of the study meta-parameters");
        cmd->add_flag("--progress", common->progress, "Status lines on stderr");
    };
    auto config = [this, common](const WorkspaceConfig& ws) {
        return study_config(ws, common->seed, common->timesteps, err_, common->progress);
    };

    {
        struct Opts {
            std::size_t trials = 8192;
            std::string threshold = "tail";
            std::size_t null_n = 2987;
            bool insecure = false;
        };
        auto o = std::make_shared<Opts>();
        auto* cmd = lab->add_subcommand("random-forger", "Random-forger success rate against a genuine claim");
        add_common(cmd);
        cmd->add_option("--trials", o->trials, "Forgery attempts");
        cmd->add_option("--threshold", o->threshold, "tail | self | -inf | a number");
        cmd->add_option("--null-n", o->null_n, "Null scores behind the tail threshold");
        cmd->add_flag("--insecure-prf", o->insecure, "Forger seeds from the tail-truncation PRF");
        cmd->callback([this, o, config] {
            WorkspaceConfig ws = workspace();
            lab::StudyConfig cfg = config(ws);
            auto backend = ws.make_backend();
            Identity author = lab::study_identity(cfg.root, "author");
            Identity forger = lab::study_identity(cfg.root, "forger");
            Kappa kappa = lab::study_kappa(cfg, 0);
            Latent contested = backend->generate(kappa.m, kappa.e_digest, derive_seed(author, kappa));
            nlohmann::json result = {{"threshold_mode", o->threshold}};
            double threshold = 0.0;
            if (o->threshold == "tail") {
                Seed32 null_seed = derive_subseed(cfg.root, 0xfffffff0u);
                auto scores = null_scores(*backend, kappa.m, kappa.e_digest, contested, AffineParams{}, null_seed,
                                          o->null_n, cfg.parallelism);
                GenNormParams fit = fit_gennorm(scores);
                threshold = gennorm_quantile(fit, 1.0 - lab::kA2TailProbability);
                result["fitted"] = gennorm_to_json(fit);
                result["expected_rate"] = lab::kA2TailProbability;
            } else if (o->threshold == "self") {
                threshold = similarity(contested, contested);
            } else if (o->threshold == "-inf") {
                threshold = -kInfinity;
            } else {
                threshold = std::stod(o->threshold);
            }
            auto prf = o->insecure ? lab::PrfFamily::insecure(lab::InsecurePrf::TailTruncate)
                                   : lab::PrfFamily::hmac_sha3();
            lab::SuccessRate rate = lab::random_forger_success(contested, kappa, forger, threshold, o->trials,
                                                               *backend, cfg.root, prf, cfg.parallelism);
            result.update(rate.to_json());
            result["threshold"] = std::isfinite(threshold) ? nlohmann::json(threshold) : nlohmann::json("-inf");
            result["prf"] = prf.name();
            emit(result);
        });
    }
    {
        struct Opts {
            std::string strategy = "replay";
            std::size_t trials = 1000;
            bool insecure = false;
            bool fixed = false;
        };
        auto o = std::make_shared<Opts>();
        auto* cmd = lab->add_subcommand("advantage", "Forger advantage of a strategy");
        add_common(cmd);
        cmd->add_option("--strategy", o->strategy, "replay | random-guess")
            ->check(CLI::IsMember({"replay", "random-guess"}));
        cmd->add_option("--trials", o->trials, "Trials (>= 100)");
        cmd->add_flag("--insecure-prf", o->insecure, "Use the tail-truncation PRF");
        cmd->add_flag("--fixed", o->fixed, "Advantage at one fixed claim instead of averaged over claims");
        cmd->callback([this, o, config] {
            WorkspaceConfig ws = workspace();
            lab::StudyConfig cfg = config(ws);
            auto backend = ws.make_backend();
            Identity author = lab::study_identity(cfg.root, "author");
            Identity forger = lab::study_identity(cfg.root, "forger");
            Kappa kappa = lab::study_kappa(cfg, 0);
            auto strategy = o->strategy == "replay" ? lab::replay_strategy() : lab::random_guess_strategy();
            auto prf = o->insecure ? lab::PrfFamily::insecure(lab::InsecurePrf::TailTruncate)
                                   : lab::PrfFamily::hmac_sha3();
            lab::AdvantageEstimate est;
            if (o->fixed) {
                Latent contested = backend->generate(kappa.m, kappa.e_digest, prf.seed(author, kappa));
                est = lab::advantage_at(strategy, contested, kappa, author, forger, o->trials, *backend, cfg.root,
                                        prf);
            } else {
                est = lab::estimate_advantage(strategy, kappa, author, forger, o->trials, *backend, cfg.root, prf,
                                              cfg.parallelism);
            }
            nlohmann::json result = est.to_json();
            result["prf"] = prf.name();
            emit(result);
        });
    }
    {
        struct Opts {
            std::string distinguisher;
            std::size_t rounds = 10000;
            bool insecure = false;
        };
        auto o = std::make_shared<Opts>();
        auto* cmd = lab->add_subcommand("prf-game", "PRF indistinguishability game");
        add_common(cmd);
        cmd->add_option("--distinguisher", o->distinguisher, "constant | bit-frequency | xor-recovery")
            ->check(CLI::IsMember({"constant", "bit-frequency", "xor-recovery"}));
        cmd->add_option("--rounds", o->rounds, "Rounds (>= 100)");
        cmd->add_flag("--insecure-prf", o->insecure, "Use the XOR-prefix PRF");
        cmd->callback([this, o, config] {
            WorkspaceConfig ws = workspace();
            lab::StudyConfig cfg = config(ws);
            auto prf = o->insecure ? lab::PrfFamily::insecure(lab::InsecurePrf::XorPrefix)
                                   : lab::PrfFamily::hmac_sha3();
            std::string name = o->distinguisher;
            if (name.empty()) name = o->insecure ? "xor-recovery" : "bit-frequency";
            std::unique_ptr<lab::Distinguisher> d;
            if (name == "constant") d = std::make_unique<lab::ConstantDistinguisher>();
            else if (name == "bit-frequency") d = std::make_unique<lab::BitFrequencyDistinguisher>();
            else d = std::make_unique<lab::XorRecoveryDistinguisher>();
            lab::GameTranscript t = lab::play_prf_game(*d, prf, o->rounds, cfg.root);
            emit(t.to_json(d->name(), prf.name()));
        });
    }
    {
        struct Opts {
            double rho = 0.05;
            std::size_t runs = 1;
            std::size_t n = 0;
        };
        auto o = std::make_shared<Opts>();
        auto* cmd = lab->add_subcommand("a2-detect", "Null-model failure detector on a backdoored surrogate");
        add_common(cmd);
        cmd->add_option("--rho", o->rho, "Backdoored fraction of starting points")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--runs", o->runs, "Independent runs");
        cmd->add_option("--n", o->n, "Null scores per run (0: detector minimum)");
        cmd->callback([this, o, config] {
            WorkspaceConfig ws = workspace();
            lab::StudyConfig cfg = config(ws);
            auto backend = ws.make_backend();
            lab::A2Study study = lab::a2_study(require_surrogate(*backend, "a2-detect"), cfg, o->rho, o->runs, o->n);
            emit(study.to_json());
        });
    }
    {
        struct Opts {
            std::size_t embeddings = 20;
            std::size_t n = 332;
        };
        auto o = std::make_shared<Opts>();
        auto* cmd = lab->add_subcommand("ks-study", "Goodness of fit of the gennorm null model");
        add_common(cmd);
        cmd->add_option("--embeddings", o->embeddings, "Prompts");
        cmd->add_option("--n", o->n, "Null scores per prompt");
        cmd->callback([this, o, config] {
            WorkspaceConfig ws = workspace();
            lab::StudyConfig cfg = config(ws);
            auto backend = ws.make_backend();
            emit(lab::ks_study(*backend, cfg, o->embeddings, o->n).to_json());
        });
    }
    {
        struct Opts {
            std::size_t embeddings = 30;
            std::size_t pairs = 30;
            int bins = 20;
        };
        auto o = std::make_shared<Opts>();
        auto* cmd = lab->add_subcommand("distance-study", "Latent distance against starting-point distance");
        add_common(cmd);
        cmd->add_option("--embeddings", o->embeddings, "Prompts");
        cmd->add_option("--pairs", o->pairs, "Starting-point pairs per prompt");
        cmd->add_option("--bins", o->bins, "Histogram bins")->check(CLI::PositiveNumber);
        cmd->callback([this, o, config] {
            WorkspaceConfig ws = workspace();
            lab::StudyConfig cfg = config(ws);
            auto backend = ws.make_backend();
            auto study = lab::distance_study(require_surrogate(*backend, "distance-study"), cfg, o->embeddings,
                                             o->pairs);
            emit(study.to_json(o->bins));
        });
    }
    {
        auto delta = std::make_shared<double>(1e-3);
        auto* cmd = lab->add_subcommand("table1", "Sample counts for alpha in {2^-10, 2^-30, 2^-50}");
        cmd->add_option("--delta", *delta, "Failure probability")->check(CLI::Range(0.0, 1.0));
        cmd->callback([this, delta] {
            emit({{"study", "table1"}, {"delta", *delta}, {"rows", lab::table1_json(lab::table1(*delta))}});
        });
    }
    {
        struct Opts {
            std::size_t embeddings = 100;
            double delta = 1e-4;
            std::vector<std::string> p_r{"2^-10", "2^-30", "2^-50"};
        };
        auto o = std::make_shared<Opts>();
        auto* cmd = lab->add_subcommand("table2", "False-reject rates under distortions");
        add_common(cmd);
        cmd->add_option("--embeddings", o->embeddings, "Prompts");
        cmd->add_option("--delta", o->delta, "Failure probability of each estimate");
        cmd->add_option("--p-r,--p_r", o->p_r, "Rejection thresholds")->expected(1, -1);
        cmd->callback([this, o, config] {
            WorkspaceConfig ws = workspace();
            lab::StudyConfig cfg = config(ws);
            auto backend = ws.make_backend();
            auto study = lab::table2_study(*backend, cfg, o->embeddings, parse_probability_list(o->p_r), o->delta);
            emit(study.to_json());
        });
    }
}

int Runner::run(const std::vector<std::string>& args) {
    CLI::App app{"Proof-of-authorship registration, generation and adjudication", "poa"};
    app.require_subcommand(1);
    app.add_option("--workspace", globals_.workspace, "Workspace config (default: $POA_WORKSPACE or ./poa.json)");
    app.add_option("--parallelism", globals_.parallelism, "Worker threads (overrides the workspace)");
    app.set_version_flag("--version", std::string("poa ") + POA_VERSION);
    add_register(app);
    add_generate(app);
    add_contend(app);
    add_lab(app);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out_, err_);
        return code == 0 ? kAccept : kUsage;
    } catch (const BackendError& e) {
        err_ << "error: " << e.what() << '\n';
        return kBackendFailure;
    } catch (const FitError& e) {
        err_ << "error: " << e.what() << '\n';
        return kFitFailure;
    } catch (const Error& e) {
        err_ << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const nlohmann::json::exception& e) {
        err_ << "error: malformed JSON: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err_ << "error: invalid number: " << e.what() << '\n';
        return kUsage;
    }
    return exit_code_;
}

}  // namespace

nlohmann::json WorkspaceConfig::to_json() const {
    nlohmann::json j = {
        {"registry", registry.string()},
        {"archive", archive.string()},
        {"backend", backend},
        {"endpoint", endpoint},
        {"codec", {{"upscale", codec.upscale}, {"smoothing", codec.smoothing}}},
        {"delta", delta},
        {"p_r", p_r},
        {"latent_shape", latent_shape},
        {"parallelism", parallelism},
    };
    j["alpha"] = alpha ? nlohmann::json(*alpha) : nlohmann::json(nullptr);
    return j;
}

WorkspaceConfig WorkspaceConfig::from_json(const nlohmann::json& j, const fs::path& base) {
    WorkspaceConfig c;
    try {
        c.registry = j.value("registry", c.registry.string());
        c.archive = j.value("archive", c.archive.string());
        c.backend = j.value("backend", c.backend);
        c.endpoint = j.value("endpoint", c.endpoint);
        if (j.contains("codec")) {
            c.codec.upscale = j.at("codec").value("upscale", c.codec.upscale);
            c.codec.smoothing = j.at("codec").value("smoothing", c.codec.smoothing);
        }
        if (j.contains("alpha") && !j.at("alpha").is_null()) {
            const auto& a = j.at("alpha");
            c.alpha = a.is_string() ? parse_probability(a.get<std::string>()) : a.get<double>();
        }
        if (j.contains("delta")) c.delta = j.at("delta").get<double>();
        if (j.contains("p_r")) {
            const auto& p = j.at("p_r");
            c.p_r = p.is_string() ? parse_probability(p.get<std::string>()) : p.get<double>();
        }
        if (j.contains("latent_shape")) c.latent_shape = j.at("latent_shape").get<Shape3>();
        c.parallelism = j.value("parallelism", c.parallelism);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("workspace config: ") + e.what());
    }
    if (c.backend != "surrogate" && c.backend != "remote") {
        throw UsageError("workspace config: backend must be \"surrogate\" or \"remote\"");
    }
    if (c.backend == "remote" && c.endpoint.empty()) throw UsageError("workspace config: remote backend needs an endpoint");
    if (!(c.p_r > 0.0 && c.p_r < 1.0)) throw UsageError("workspace config: p_r must lie in (0, 1)");
    if (c.parallelism < 1) throw UsageError("workspace config: parallelism must be positive");
    c.registry = resolve(base, c.registry);
    c.archive = resolve(base, c.archive);
    return c;
}

std::unique_ptr<Backend> WorkspaceConfig::make_backend() const {
    if (backend == "remote") return std::make_unique<RemoteBackend>(endpoint);
    return std::make_unique<SurrogateBackend>(codec);
}

WorkspaceConfig load_workspace(const std::optional<fs::path>& path) {
    std::optional<fs::path> config = path;
    if (!config) {
        if (const char* env = std::getenv("POA_WORKSPACE"); env && *env) config = fs::path(env);
    }
    if (!config) {
        fs::path local = fs::current_path() / kConfigName;
        if (!fs::exists(local)) return WorkspaceConfig::from_json(nlohmann::json::object(), fs::current_path());
        config = local;
    }
    if (fs::is_directory(*config)) config = *config / kConfigName;
    fs::path base = fs::absolute(*config).parent_path();
    if (!fs::exists(*config)) throw UsageError("workspace config not found: " + config->string());
    return WorkspaceConfig::from_json(parse_json_text(read_text(*config), "workspace config"), base);
}

double parse_probability(const std::string& text) {
    auto fail = [&text]() -> double { throw UsageError("cannot parse probability '" + text + "'"); };
    if (text.rfind("2^", 0) == 0) {
        std::size_t used = 0;
        double exponent = 0.0;
        try {
            exponent = std::stod(text.substr(2), &used);
        } catch (const std::exception&) {
            return fail();
        }
        if (used != text.size() - 2) return fail();
        return std::exp2(exponent);
    }
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) return fail();
    return v;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Runner runner(out, err);
    return runner.run(args);
}

}  // namespace poa::cli
