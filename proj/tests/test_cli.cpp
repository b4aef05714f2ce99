// Copyright (C) 2026 The poa authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "echo_stub.hpp"
#include "poa/adjudicator.hpp"
#include "poa/errors.hpp"
#include "support.hpp"

namespace poa::cli {
namespace {

struct Result {
    int code;
    nlohmann::json json;
    std::string out;
    std::string err;
};

class Cli {
public:
    explicit Cli(nlohmann::json config = nlohmann::json::object()) {
        config_ = dir_ / "poa.json";
        std::ofstream(config_) << config.dump();
        std::ofstream(dir_ / "m.json") << R"({"latent_shape":[4,16,16],"model_tag":"toy-ddim-v1","scheduler":"ddim","timesteps":10})";
    }

    Result run(std::vector<std::string> args) {
        args.insert(args.begin(), {"--workspace", config_.string()});
        std::ostringstream out, err;
        Result r{cli::run(args, out, err), nullptr, out.str(), err.str()};
        if (!r.out.empty() && r.out.front() == '{') r.json = nlohmann::json::parse(r.out);
        return r;
    }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    // Registers "alice" and generates one latent; returns the generate output.
    nlohmann::json bootstrap(const std::string& prompt = "a red fox") {
        EXPECT_EQ(run({"register", "alice", "--seed", "01"}).code, kAccept);
        Result g = run({"generate", "--identity", "alice", "--m-file", path("m.json"), "--prompt", prompt, "--r",
                        "000102030405060708090a0b0c0d0e0f", "--out", path("j.poal"), "--image-out", path("j.img")});
        EXPECT_EQ(g.code, kAccept) << g.err;
        return g.json;
    }

private:
    test::TempDir dir_;
    std::filesystem::path config_;
};

TEST(Cli, VersionAndHelp) {
    std::ostringstream out, err;
    EXPECT_EQ(run({"--version"}, out, err), kAccept);
    EXPECT_NE(out.str().find(POA_VERSION), std::string::npos);
    std::ostringstream hout, herr;
    EXPECT_EQ(run({"--help"}, hout, herr), kAccept);
    EXPECT_NE(hout.str().find("contend"), std::string::npos);
    std::ostringstream uout, uerr;
    EXPECT_EQ(run({"no-such-command"}, uout, uerr), kUsage);
}

TEST(Cli, RegisterAndDuplicate) {
    Cli cli;
    Result r = cli.run({"register", "alice", "--entropy", std::string(64, 'a')});
    ASSERT_EQ(r.code, kAccept) << r.err;
    EXPECT_EQ(r.json.at("id_hex"), std::string(64, 'a'));
    EXPECT_EQ(r.json.at("label"), "alice");
    EXPECT_TRUE(r.json.contains("registered_at"));
    EXPECT_EQ(cli.run({"register", "alice-again", "--entropy", std::string(64, 'a')}).code, kUsage);
    EXPECT_EQ(cli.run({"register", "bob", "--entropy", "zz"}).code, kUsage);
    Result fresh = cli.run({"register", "carol"});
    EXPECT_EQ(fresh.code, kAccept);
    EXPECT_EQ(fresh.json.at("id_hex").get<std::string>().size(), 64u);
}

TEST(Cli, GenerateOutputs) {
    Cli cli;
    nlohmann::json g = cli.bootstrap();
    for (const char* key : {"identity_id_hex", "r_hex", "e_digest_hex", "seed_digest_hex", "latent_path",
                            "latent_digest_hex", "image_path", "image_digest_hex"}) {
        EXPECT_TRUE(g.contains(key)) << key;
    }
    EXPECT_EQ(g.at("r_hex").get<std::string>(), "000102030405060708090a0b0c0d0e0f");
    EXPECT_EQ(g.at("e_digest_hex"), to_hex(sha3_256(as_bytes("a red fox"))));
    Latent latent = latent_from_poal(read_file(cli.path("j.poal")));
    EXPECT_EQ(to_hex(latent_digest(latent)), g.at("latent_digest_hex"));

    Result again = cli.run({"generate", "--identity", "alice", "--m-file", cli.path("m.json"), "--prompt", "a red fox",
                            "--r", "000102030405060708090a0b0c0d0e0f", "--out", cli.path("k.poal")});
    EXPECT_EQ(again.json.at("latent_digest_hex"), g.at("latent_digest_hex"));
}

TEST(Cli, GenerateErrors) {
    Cli cli;
    cli.bootstrap();
    Result missing = cli.run({"generate", "--identity", "alice", "--m-file", cli.path("none.json"), "--prompt", "x",
                              "--out", cli.path("x.poal")});
    EXPECT_EQ(missing.code, kUsage);
    EXPECT_NE(missing.err.find("m-file"), std::string::npos);
    Result unknown = cli.run({"generate", "--identity", "mallory", "--m-file", cli.path("m.json"), "--prompt", "x",
                              "--out", cli.path("x.poal")});
    EXPECT_EQ(unknown.code, kUsage);
    Result neither = cli.run({"generate", "--identity", "alice", "--m-file", cli.path("m.json"), "--out",
                              cli.path("x.poal")});
    EXPECT_EQ(neither.code, kUsage);
    std::ofstream(cli.path("bad.json")) << "{not json";
    EXPECT_EQ(cli.run({"generate", "--identity", "alice", "--m-file", cli.path("bad.json"), "--prompt", "x", "--out",
                       cli.path("x.poal")})
                  .code,
              kUsage);
}

TEST(Cli, ContendGenuineAccepts) {
    Cli cli;
    nlohmann::json g = cli.bootstrap();
    Result r = cli.run({"contend", "--contested", cli.path("j.poal"), "--identity", "alice", "--kappa-r",
                        g.at("r_hex").get<std::string>(), "--p-r", "2^-10", "--delta", "1e-3", "--out", cli.path("report.json")});
    ASSERT_EQ(r.code, kAccept) << r.err;
    for (const char* key : {"T", "n", "q_hat", "q_hat_log2", "q_upper_log2", "ks", "fitted", "verdict", "report_path"}) {
        EXPECT_TRUE(r.json.contains(key)) << key;
    }
    EXPECT_TRUE(r.json.at("verdict").at("accept").get<bool>());
    EXPECT_EQ(r.json.at("n"), required_samples(0x1p-11, 1e-3));
    AdjudicationReport report = AdjudicationReport::from_json(nlohmann::json::parse(test::read_text(cli.path("report.json"))));
    EXPECT_EQ(report.n, r.json.at("n").get<std::size_t>());

    Result image = cli.run({"contend", "--contested", cli.path("j.img"), "--identity", "alice", "--kappa-r",
                            g.at("r_hex").get<std::string>(), "--p_r", "2^-10", "--delta", "1e-3", "--out", cli.path("r2.json")});
    EXPECT_EQ(image.code, kAccept) << image.err;
}

TEST(Cli, ContendReportsAreByteIdentical) {
    Cli cli;
    nlohmann::json g = cli.bootstrap();
    for (const char* name : {"a.json", "b.json"}) {
        ASSERT_EQ(cli.run({"contend", "--contested", cli.path("j.poal"), "--identity", "alice", "--kappa-r",
                           g.at("r_hex").get<std::string>(), "--p-r", "2^-10", "--delta", "1e-3", "--out", cli.path(name)})
                      .code,
                  kAccept);
    }
    EXPECT_EQ(test::read_text(cli.path("a.json")), test::read_text(cli.path("b.json")));
}

TEST(Cli, ContendUnrelatedRejects) {
    Cli cli;
    nlohmann::json g = cli.bootstrap();
    ASSERT_EQ(cli.run({"generate", "--identity", "alice", "--m-file", cli.path("m.json"), "--prompt", "something else",
                       "--r", "ffffffffffffffffffffffffffffffff", "--out", cli.path("other.poal")})
                  .code,
              kAccept);
    Result r = cli.run({"contend", "--contested", cli.path("other.poal"), "--identity", "alice", "--kappa-r",
                        g.at("r_hex").get<std::string>(), "--p-r", "2^-10", "--delta", "1e-3", "--out", cli.path("report.json")});
    EXPECT_EQ(r.code, kReject) << r.err;
    EXPECT_FALSE(r.json.at("verdict").at("accept").get<bool>());
}

TEST(Cli, ContendErrors) {
    Cli cli;
    nlohmann::json g = cli.bootstrap();
    const std::vector<std::string> base = {"contend", "--contested", cli.path("j.poal"), "--identity", "alice",
                                           "--p-r", "2^-10", "--delta", "1e-3", "--out", cli.path("r.json")};
    auto with = [&](std::vector<std::string> extra) {
        std::vector<std::string> args = base;
        args.insert(args.end(), extra.begin(), extra.end());
        return cli.run(args);
    };
    EXPECT_EQ(with({"--kappa-r", "00000000000000000000000000000000"}).code, kUsage);
    EXPECT_EQ(with({}).code, kUsage);
    EXPECT_EQ(with({"--kappa-r", g.at("r_hex").get<std::string>(), "--transform", "{\"rot_deg\": "}).code, kUsage);
    EXPECT_EQ(with({"--kappa-r", g.at("r_hex").get<std::string>(), "--transform", R"({"scale": 0})"}).code, kUsage);
    EXPECT_EQ(with({"--kappa-r", g.at("r_hex").get<std::string>(), "--alpha", "2^x"}).code, kUsage);
    Result png = cli.run({"contend", "--contested", cli.path("fake.png"), "--identity", "alice", "--kappa-r",
                          g.at("r_hex").get<std::string>(), "--p-r", "2^-10"});
    EXPECT_EQ(png.code, kUsage);
}

TEST(Cli, PngContestedNeedsBackendSupport) {
    Cli cli;
    nlohmann::json g = cli.bootstrap();
    const Bytes magic = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n', 0, 0};
    write_file(cli.path("x.png"), magic);
    Result r = cli.run({"contend", "--contested", cli.path("x.png"), "--identity", "alice", "--kappa-r", g.at("r_hex").get<std::string>(),
                        "--p-r", "2^-10", "--delta", "1e-3", "--out", cli.path("r.json")});
    EXPECT_EQ(r.code, kBackendFailure);
}

TEST(Cli, InlineKappaFile) {
    Cli cli;
    nlohmann::json g = cli.bootstrap();
    Kappa kappa;
    kappa.m = meta_from_json(nlohmann::json::parse(test::read_text(cli.path("m.json"))));
    kappa.e_digest = sha3_256(as_bytes("a red fox"));
    kappa.r = fixed_from_hex<16>("000102030405060708090a0b0c0d0e0f");
    std::ofstream(cli.path("kappa.json")) << kappa_to_json(kappa).dump();
    Result r = cli.run({"contend", "--contested", cli.path("j.poal"), "--identity", "alice", "--kappa",
                        cli.path("kappa.json"), "--p-r", "2^-10", "--delta", "1e-3", "--out", cli.path("r.json")});
    EXPECT_EQ(r.code, kAccept) << r.err;
}

TEST(Cli, RemoteBackendFailures) {
    std::string endpoint;
    {
        test::EchoStub stub;
        endpoint = stub.endpoint();
    }
    Cli cli(nlohmann::json{{"backend", "remote"}, {"endpoint", endpoint}});
    EXPECT_EQ(cli.run({"register", "alice", "--seed", "01"}).code, kAccept);
    Result g = cli.run({"generate", "--identity", "alice", "--m-file", cli.path("m.json"), "--prompt", "p", "--out",
                        cli.path("j.poal")});
    EXPECT_EQ(g.code, kBackendFailure);
}

TEST(Cli, RemoteBackendAgainstStub) {
    test::EchoStub stub;
    Cli cli(nlohmann::json{{"backend", "remote"}, {"endpoint", stub.endpoint()}});
    ASSERT_EQ(cli.run({"register", "alice", "--seed", "01"}).code, kAccept);
    Result g = cli.run({"generate", "--identity", "alice", "--m-file", cli.path("m.json"), "--prompt", "p", "--out",
                        cli.path("j.poal")});
    ASSERT_EQ(g.code, kAccept) << g.err;
    EXPECT_GE(stub.generate_calls(), 1);
    Result r = cli.run({"contend", "--contested", cli.path("j.poal"), "--identity", "alice", "--kappa-r",
                        g.json.at("r_hex").get<std::string>(), "--p-r", "2^-10", "--delta", "1e-2", "--out",
                        cli.path("r.json")});
    EXPECT_EQ(r.code, kAccept) << r.err;
    stub.fault(test::StubFault::ServerError);
    Result failed = cli.run({"contend", "--contested", cli.path("j.poal"), "--identity", "alice", "--kappa-r",
                             g.json.at("r_hex").get<std::string>(), "--p-r", "2^-10", "--delta", "1e-2", "--out",
                             cli.path("r.json")});
    EXPECT_EQ(failed.code, kBackendFailure);
}

TEST(Cli, WorkspaceValidation) {
    Cli bad_backend(nlohmann::json{{"backend", "gpu"}});
    EXPECT_EQ(bad_backend.run({"register", "x"}).code, kUsage);
    Cli no_endpoint(nlohmann::json{{"backend", "remote"}});
    EXPECT_EQ(no_endpoint.run({"register", "x"}).code, kUsage);
    Cli bad_p(nlohmann::json{{"p_r", 2.0}});
    EXPECT_EQ(bad_p.run({"register", "x"}).code, kUsage);
    Cli string_p(nlohmann::json{{"p_r", "2^-10"}, {"alpha", "2^-12"}});
    EXPECT_EQ(string_p.run({"register", "x"}).code, kAccept);
    std::ostringstream out, err;
    EXPECT_EQ(run({"--workspace", "/nonexistent/poa.json", "register", "x"}, out, err), kUsage);
}

TEST(Cli, ParseProbability) {
    EXPECT_EQ(parse_probability("2^-50"), 0x1p-50);
    EXPECT_EQ(parse_probability("0x1p-10"), 0x1p-10);
    EXPECT_EQ(parse_probability("0.25"), 0.25);
    EXPECT_THROW(parse_probability("2^"), UsageError);
    EXPECT_THROW(parse_probability("abc"), UsageError);
    EXPECT_THROW(parse_probability(""), UsageError);
}

TEST(CliLab, SampleCountTable) {
    Cli cli;
    Result r = cli.run({"lab", "table1"});
    ASSERT_EQ(r.code, kAccept) << r.err;
    ASSERT_TRUE(r.json.contains("rows"));
    EXPECT_EQ(r.json.at("rows").size(), 3u);
}

TEST(CliLab, PrfGameBrokenAndSecure) {
    Cli cli;
    Result broken = cli.run({"lab", "prf-game", "--insecure-prf", "--rounds", "200", "--seed", "02"});
    ASSERT_EQ(broken.code, kAccept) << broken.err;
    EXPECT_GE(broken.json.at("advantage").get<double>(), 0.49);
    EXPECT_EQ(broken.json.at("strategy"), "xor-recovery");
    Result secure = cli.run({"lab", "prf-game", "--rounds", "200", "--seed", "02"});
    EXPECT_LE(std::abs(secure.json.at("advantage").get<double>()), 0.15);
    EXPECT_EQ(cli.run({"lab", "prf-game", "--rounds", "50"}).code, kUsage);
}

TEST(CliLab, RandomForgerAndAdvantage) {
    Cli cli;
    Result all = cli.run({"lab", "random-forger", "--threshold", "-inf", "--trials", "16"});
    ASSERT_EQ(all.code, kAccept) << all.err;
    EXPECT_EQ(all.json.at("successes"), 16);
    Result self = cli.run({"lab", "random-forger", "--threshold", "self", "--trials", "64"});
    EXPECT_EQ(self.json.at("successes"), 0);
    Result adv = cli.run({"lab", "advantage", "--strategy", "replay", "--trials", "100", "--insecure-prf"});
    ASSERT_EQ(adv.code, kAccept) << adv.err;
    EXPECT_GE(adv.json.at("advantage").get<double>(), 0.45);
    EXPECT_EQ(cli.run({"lab", "advantage", "--strategy", "oracle"}).code, kUsage);
}

TEST(CliLab, StudiesEmitJson) {
    Cli cli;
    Result ks = cli.run({"lab", "ks-study", "--embeddings", "1", "--n", "332"});
    ASSERT_EQ(ks.code, kAccept) << ks.err;
    EXPECT_EQ(ks.json.at("study"), "ks");
    Result dist = cli.run({"lab", "distance-study", "--embeddings", "1", "--pairs", "3", "--bins", "4"});
    ASSERT_EQ(dist.code, kAccept) << dist.err;
    EXPECT_EQ(dist.json.at("histogram").size(), 4u);
    Result a2 = cli.run({"lab", "a2-detect", "--rho", "0.05", "--runs", "1", "--n", "1500"});
    ASSERT_EQ(a2.code, kAccept) << a2.err;
    EXPECT_EQ(a2.json.at("violated"), 1);
}

}  // namespace
}  // namespace poa::cli
