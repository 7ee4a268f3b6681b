#include "feduv/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "feduv/bch.hpp"
#include "feduv/binio.hpp"
#include "feduv/protocol.hpp"
#include "feduv/rng.hpp"

namespace feduv::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void require_file(const std::string& path, const std::string& producer) {
    if (!fs::exists(path))
        throw MissingArtifact("missing artifact " + path + "; run `" + producer + "` first");
}

uint64_t client_secret_seed(const RunConfig& config, int user_index) {
    return derive_seed(config.seed, 0x636c6931u /* "cli1" */,
                       static_cast<uint64_t>(user_index));
}

uint64_t client_train_seed(const RunConfig& config, int user_index) {
    return derive_seed(config.seed, 0x636c6932u /* "cli2" */,
                       static_cast<uint64_t>(user_index));
}

bool is_feduv_method(fed::Method m) {
    return m == fed::Method::feduv || m == fed::Method::feduv_with_neg;
}

}  // namespace

Artifacts::Artifacts(std::string dir) : out_dir(std::move(dir)) {}

std::string Artifacts::manifest() const { return out_dir + "/manifest.json"; }
std::string Artifacts::user_dir(int u) const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "/users/u%04d", u);
    return out_dir + buf;
}
std::string Artifacts::user_data(int u) const { return user_dir(u) + "/data.bin"; }
std::string Artifacts::user_secret(int u) const { return user_dir(u) + "/secret.csv"; }
std::string Artifacts::assignments() const { return out_dir + "/server/assignments.csv"; }
std::string Artifacts::metrics() const { return out_dir + "/metrics.csv"; }
std::string Artifacts::checkpoint_final() const { return out_dir + "/checkpoints/final.ckpt"; }
std::string Artifacts::checkpoint_round(int round) const {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "/checkpoints/round_%06d.ckpt", round);
    return out_dir + buf;
}
std::string Artifacts::thresholds() const { return out_dir + "/thresholds.csv"; }
std::string Artifacts::roc_csv() const { return out_dir + "/roc.csv"; }
std::string Artifacts::summary() const { return out_dir + "/summary.json"; }
std::string Artifacts::plot(const std::string& split) const {
    return out_dir + "/plots/roc_" + split + ".svg";
}
std::string Artifacts::lockfile() const { return out_dir + "/.lock"; }

DirLock::DirLock(const std::string& out_dir) {
    fs::create_directories(out_dir);
    path_ = Artifacts(out_dir).lockfile();
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        throw OutputLocked("output directory is locked by another command: " + path_);
    ::close(fd);
    held_ = true;
}

DirLock::~DirLock() {
    if (held_) ::unlink(path_.c_str());
}

void cmd_gen_data(const RunConfig& config) {
    validate(config);
    DirLock lock(config.out_dir);
    Artifacts art(config.out_dir);

    auto [known, unknown] = synth::generate(config.data);
    json manifest;
    manifest["dim"] = config.data.dim;
    manifest["k_train"] = config.data.K_train;
    manifest["k_unknown"] = config.data.K_unknown;
    manifest["n_train"] = config.data.n_train;
    manifest["n_val"] = config.data.n_val;
    manifest["n_test"] = config.data.n_test;
    manifest["users"] = json::array();

    auto emit = [&](const synth::UserDataset& user) {
        fs::create_directories(art.user_dir(user.user_index));
        synth::save_user(user, art.user_data(user.user_index));
        manifest["users"].push_back({{"index", user.user_index},
                                     {"known", user.known},
                                     {"file", art.user_data(user.user_index)}});
    };
    for (const auto& u : known) emit(u);
    for (const auto& u : unknown) emit(u);

    std::ofstream os(art.manifest(), std::ios::trunc);
    os << manifest.dump(2) << "\n";
    if (!os) throw MissingArtifact("cannot write " + art.manifest());
}

void cmd_gen_codes(const RunConfig& config) {
    validate(config);
    DirLock lock(config.out_dir);
    Artifacts art(config.out_dir);
    require_file(art.manifest(), "gen-data");

    auto spec = ecc::build_code(config.code_m, config.code_k_min);
    auto bases = protocol::assign_base_vectors(config.data.K_train, config.l_b,
                                               derive_seed(config.seed, 0x73727672u /* "srvr" */));

    fs::create_directories(config.out_dir + "/server");
    std::ofstream server(art.assignments(), std::ios::trunc);
    protocol::write_assignment_file(server, bases, config.l_b);
    if (!server) throw MissingArtifact("cannot write " + art.assignments());

    // clients derive and store their secrets next to their local data,
    // mirroring the privacy boundary: nothing below server/ holds a codeword
    for (const auto& base : bases) {
        auto sa = protocol::derive_secret(spec, base, client_secret_seed(config, base.user_index));
        fs::create_directories(art.user_dir(base.user_index));
        std::ofstream os(art.user_secret(base.user_index), std::ios::trunc);
        protocol::write_secret_file(os, spec, sa);
        if (!os) throw MissingArtifact("cannot write " + art.user_secret(base.user_index));
    }
}

LoadedData load_datasets(const RunConfig& config) {
    Artifacts art(config.out_dir);
    require_file(art.manifest(), "gen-data");
    std::ifstream is(art.manifest());
    json manifest;
    is >> manifest;

    LoadedData data;
    for (const auto& entry : manifest.at("users")) {
        auto user = synth::load_user(entry.at("file").get<std::string>());
        (user.known ? data.known : data.unknown).push_back(std::move(user));
    }
    if (data.known.empty()) throw MissingArtifact("manifest lists no known users");
    return data;
}

std::map<int, Vec> load_secrets(const RunConfig& config, const ecc::CodeSpec& spec) {
    Artifacts art(config.out_dir);
    std::map<int, Vec> secrets;
    for (int u = 0; u < config.data.K_train; ++u) {
        require_file(art.user_secret(u), "gen-codes");
        std::ifstream is(art.user_secret(u));
        auto sa = protocol::read_secret_file(is, spec, config.l_b);
        secrets[u] = sa.codeword.bipolar;
    }
    return secrets;
}

void cmd_train(const RunConfig& config) {
    validate(config);
    DirLock lock(config.out_dir);
    Artifacts art(config.out_dir);

    auto data = load_datasets(config);
    const auto method = config.federation.method;

    ecc::CodeSpec spec;
    std::map<int, Vec> secrets;
    if (is_feduv_method(method)) {
        spec = ecc::build_code(config.code_m, config.code_k_min);
        secrets = load_secrets(config, spec);
    }

    std::vector<fed::ClientState> clients;
    for (const auto& user : data.known) {
        fed::ClientState c;
        c.user_index = user.user_index;
        c.dataset = user.train;
        c.client_seed = client_train_seed(config, user.user_index);
        if (is_feduv_method(method)) {
            protocol::SecretAssignment sa;
            sa.base.user_index = user.user_index;
            sa.codeword.bipolar = secrets.at(user.user_index);
            c.secret = std::move(sa);
        }
        clients.push_back(std::move(c));
    }
    if (method == fed::Method::feduv_with_neg) {
        for (auto& c : clients)
            for (const auto& [u, v] : secrets)
                if (u != c.user_index) c.other_codewords.push_back(v);
    }

    const int out_rows = is_feduv_method(method) ? spec.c : config.data.K_train;
    auto init = model::init_params(config.arch(), out_rows,
                                   derive_seed(config.seed, 0x696e6974u /* "init" */));

    fs::create_directories(config.out_dir + "/checkpoints");
    std::ofstream metrics(art.metrics(), std::ios::trunc);
    metrics << "round,lr,mean_loss,sampled_users,checksum\n";

    auto observer = [&](int round, const model::ModelParams& params,
                        const fed::RoundReport& report) {
        std::string users;
        for (size_t i = 0; i < report.sampled.size(); ++i) {
            if (i) users += '|';
            users += std::to_string(report.sampled[i]);
        }
        metrics << report.round << "," << fmt_double(report.lr) << ","
                << fmt_double(report.mean_loss) << "," << users << ","
                << hex64(report.checksum) << "\n";
        if (config.checkpoint_every > 0 && (round + 1) % config.checkpoint_every == 0)
            model::save_checkpoint(params, art.checkpoint_round(round + 1));
    };

    auto [params, reports] = fed::run_federation(config.federation, clients, init, observer);
    if (!metrics) throw MissingArtifact("cannot write " + art.metrics());
    metrics.close();
    model::save_checkpoint(params, art.checkpoint_final());
}

namespace {

verify::UserScorer scorer_for(const RunConfig& config, std::map<int, Vec>&& secrets) {
    return verify::UserScorer::for_method(config.federation.method, std::move(secrets));
}

verify::UserScorer make_scorer(const RunConfig& config) {
    if (is_feduv_method(config.federation.method)) {
        auto spec = ecc::build_code(config.code_m, config.code_k_min);
        return scorer_for(config, load_secrets(config, spec));
    }
    return scorer_for(config, {});
}

}  // namespace

void cmd_calibrate(const RunConfig& config, const std::string& checkpoint_path) {
    validate(config);
    DirLock lock(config.out_dir);
    Artifacts art(config.out_dir);
    const std::string ckpt = checkpoint_path.empty() ? art.checkpoint_final() : checkpoint_path;
    require_file(ckpt, "train");

    auto data = load_datasets(config);
    auto scorer = make_scorer(config);
    auto params = model::load_checkpoint(ckpt);

    // warm-up inputs: the user's held-out validation split
    std::ofstream os(art.thresholds(), std::ios::trunc);
    os << "user_index,tau,q,n\n";
    for (const auto& user : data.known) {
        auto th = verify::warmup_threshold(params, scorer, user.user_index, user.val,
                                           config.warmup_q);
        os << user.user_index << "," << fmt_double(th.tau) << "," << fmt_double(th.q) << ","
           << th.n << "\n";
    }
    if (!os) throw MissingArtifact("cannot write " + art.thresholds());
}

std::map<int, double> load_thresholds(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifact("cannot open thresholds file " + path);
    std::string line;
    std::getline(is, line);  // header
    std::map<int, double> taus;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        int user = 0;
        double tau = 0.0, q = 0.0;
        int n = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%d", &user, &tau, &q, &n) < 2)
            throw MissingArtifact("malformed thresholds line: " + line);
        taus[user] = tau;
    }
    if (taus.empty()) throw MissingArtifact("thresholds file is empty: " + path);
    return taus;
}

void cmd_evaluate(const RunConfig& config, const std::string& checkpoint_path,
                  const std::string& thresholds_path) {
    validate(config);
    DirLock lock(config.out_dir);
    Artifacts art(config.out_dir);
    const std::string ckpt = checkpoint_path.empty() ? art.checkpoint_final() : checkpoint_path;
    const std::string thrs = thresholds_path.empty() ? art.thresholds() : thresholds_path;
    require_file(ckpt, "train");
    require_file(thrs, "calibrate");

    auto data = load_datasets(config);
    auto scorer = make_scorer(config);
    auto params = model::load_checkpoint(ckpt);
    auto taus = load_thresholds(thrs);

    verify::RocOptions options;
    options.grid_points = config.roc_grid;
    options.max_impostors_per_verifier = config.max_impostors_per_verifier;
    options.subsample_seed = derive_seed(config.seed, 0x726f63u /* "roc" */);

    std::ofstream roc(art.roc_csv(), std::ios::trunc);
    roc << "split,threshold,tpr,fpr\n";
    json summary;
    fs::create_directories(config.out_dir + "/plots");

    for (auto split : {verify::Split::train, verify::Split::test_known,
                       verify::Split::test_unknown}) {
        auto trials = verify::collect_trials(params, scorer, data.known, data.unknown, split,
                                             options);
        auto curve = verify::roc_from_trials(trials, split, options.grid_points);
        const std::string name = verify::split_name(split);
        for (const auto& p : curve.points)
            roc << name << "," << fmt_double(p.threshold) << "," << fmt_double(p.tpr) << ","
                << fmt_double(p.fpr) << "\n";

        auto op = verify::operating_point(params, scorer, data.known, data.unknown, split, taus);
        summary[name] = {{"auc", verify::auc(trials)},
                         {"tpr_at_fpr_0.01", verify::tpr_at_fpr(trials, 0.01)},
                         {"tpr_at_fpr_0.05", verify::tpr_at_fpr(trials, 0.05)},
                         {"tpr_at_fpr_0.10", verify::tpr_at_fpr(trials, 0.10)},
                         {"operating_tpr", op.tpr},
                         {"operating_fpr", op.fpr},
                         {"genuine_trials", trials.genuine.size()},
                         {"impostor_trials", trials.impostor.size()}};

        std::ofstream svg(art.plot(name), std::ios::trunc);
        svg << roc_svg(curve);
        if (!svg) throw MissingArtifact("cannot write " + art.plot(name));
    }
    if (!roc) throw MissingArtifact("cannot write " + art.roc_csv());

    std::ofstream sum(art.summary(), std::ios::trunc);
    sum << summary.dump(2) << "\n";
    if (!sum) throw MissingArtifact("cannot write " + art.summary());
}

std::string roc_svg(const verify::RocCurve& curve) {
    // 480x480 canvas, 60px margins, unit square axes
    const double size = 480.0, margin = 60.0, span = size - 2.0 * margin;
    auto X = [&](double fpr) { return margin + fpr * span; };
    auto Y = [&](double tpr) { return size - margin - tpr * span; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" "
           "viewBox=\"0 0 480 480\">\n";
    svg << "<rect width=\"480\" height=\"480\" fill=\"white\"/>\n";
    // frame and diagonal
    svg << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << span
        << "\" height=\"" << span << "\" fill=\"none\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << X(0) << "\" y1=\"" << Y(0) << "\" x2=\"" << X(1) << "\" y2=\""
        << Y(1) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n";
    // grid ticks every 0.2
    for (int i = 0; i <= 5; ++i) {
        double v = 0.2 * i;
        svg << "<text x=\"" << X(v) - 8 << "\" y=\"" << size - margin + 18
            << "\" font-size=\"11\">" << v << "</text>\n";
        svg << "<text x=\"" << margin - 30 << "\" y=\"" << Y(v) + 4 << "\" font-size=\"11\">"
            << v << "</text>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : curve.points) svg << X(p.fpr) << "," << Y(p.tpr) << " ";
    svg << "\"/>\n";
    svg << "<text x=\"" << size / 2 - 60 << "\" y=\"" << margin - 20
        << "\" font-size=\"14\">ROC (" << verify::split_name(curve.split) << ")</text>\n";
    svg << "<text x=\"" << size / 2 - 60 << "\" y=\"" << size - 14
        << "\" font-size=\"12\">false positive rate</text>\n";
    svg << "<text x=\"16\" y=\"" << size / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 "
        << size / 2 << ")\">true positive rate</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace feduv::cli
