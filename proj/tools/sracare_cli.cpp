// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sracare/sracare.hpp"

namespace {

using namespace sracare;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, ByteView data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

SecureRom load_rom(const std::string& path) { return SecureRom::parse(read_file(path)); }

const char* side(Direction d) { return d == Direction::ToProver ? "V->P" : "P->V"; }

struct Options {
  std::uint64_t seed = 0;

  std::string image;
  std::string key_hex;
  std::string output;
  std::string chip_info;

  std::string rom;
  std::string corrupt;
  bool no_resilience = false;

  std::uint32_t addr = 0;
  std::uint32_t len = 0;
  std::string verifier_key_hex;

  std::string config;

  unsigned frames = 6;
  std::string preset = "paper";
  bool csv = false;
};

int cmd_pack(const Options& o) {
  const SecretKey key(from_hex(o.key_hex));
  const auto frames = pack_image(read_file(o.image), key);
  write_file(o.output, serialize_frame_stream(frames));
  std::cout << "packed " << frames.size() << " frames (" << frames.size() * kFrameSize << " bytes) -> "
            << o.output << '\n';
  return kExitOk;
}

int cmd_mkrom(const Options& o) {
  const SecretKey key(from_hex(o.key_hex));
  const ChipInfo ci = ChipInfo::parse(read_file(o.chip_info));
  const SecureRom rom = SecureRom::from_image(ci, key, read_file(o.image));
  write_file(o.output, rom.serialize());
  std::cout << "rom with " << rom.frame_count() << " golden frames -> " << o.output << '\n';
  return kExitOk;
}

int cmd_boot(const Options& o) {
  DeviceState dev = DeviceState::provision(load_rom(o.rom));
  if (!o.corrupt.empty()) {
    const auto colon = o.corrupt.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::ConfigError, "--corrupt expects frame:bit");
    AttackSpec spec;
    spec.kind = AttackKind::FlashBitFlip;
    spec.frame = std::stoul(o.corrupt.substr(0, colon));
    spec.bit = std::stoul(o.corrupt.substr(colon + 1));
    if (*spec.frame >= dev.rom().frame_count()) throw Error(ErrorCode::ConfigError, "--corrupt frame out of range");
    corrupt_flash(dev, spec);
  }

  const BootResult r = bootstrap(dev, dev.rom().key(), CycleCosts::paper(), !o.no_resilience);
  std::printf("%-6s %-8s %-10s\n", "frame", "verdict", "recovery");
  for (const FrameVerdict& v : r.verdicts) {
    std::printf("%-6zu %-8s %-10s\n", v.index, v.passed ? "pass" : "fail",
                v.recovered ? "recovered" : "-");
  }
  for (const FrameVerdict& v : r.verdicts) {
    std::printf("frame,%zu,%s,%s\n", v.index, v.passed ? "pass" : "fail", v.recovered ? "recovered" : "-");
  }
  std::printf("integrity=%s recovered=%zu cycles=%llu\n", r.integrity ? "true" : "false", r.recovered_count,
              static_cast<unsigned long long>(r.cycles));
  return r.integrity ? kExitOk : kExitFailure;
}

int cmd_attest(const Options& o) {
  const SecureRom rom = load_rom(o.rom);
  DeviceState dev = DeviceState::provision(rom);
  const AttestParams params{o.addr, o.len};
  if (params.l == 0) throw Error(ErrorCode::ConfigError, "--len must be > 0");

  std::optional<Bytes> expected;
  const std::size_t end = std::size_t{params.s_addr} + params.l;
  if (end <= dev.flash_capacity()) expected = dev.flash_read(params.s_addr, params.l);

  VerifierSession verifier(rom.key(), VerifierIntent::attest(params, expected));
  ProverSession prover(dev);
  Rng rng(o.seed);
  const SessionOutcome out = run_session(verifier, prover, dev, rng);
  if (!out.report) {
    std::cout << "CLOSED\n";
    return kExitFailure;
  }
  std::cout << "status=" << static_cast<int>(out.report->status) << '\n';
  std::cout << "R=" << to_hex(out.report->r.view()) << '\n';
  std::cout << (out.report_valid ? "VERIFIED" : "MISMATCH") << '\n';
  return out.report_valid ? kExitOk : kExitFailure;
}

int cmd_session(const Options& o) {
  const SecureRom rom = load_rom(o.rom);
  DeviceState dev = DeviceState::provision(rom);
  const SecretKey vkey = o.verifier_key_hex.empty() ? rom.key() : SecretKey(from_hex(o.verifier_key_hex));
  VerifierSession verifier(vkey, VerifierIntent::reset());
  ProverSession prover(dev);
  Rng rng(o.seed);

  auto show = [](Direction d, const Message& m) {
    const Bytes wire = encode_message(m);
    std::cout << side(d) << ' ' << to_string(type_of(m)) << ' ' << to_hex(wire) << '\n';
    return decode_message(wire);
  };

  Message to_prover = show(Direction::ToProver, verifier.start(rng));
  Message to_verifier = show(Direction::ToVerifier, *prover.receive(dev, to_prover));
  if (auto reply = verifier.receive(to_verifier)) {
    to_prover = show(Direction::ToProver, *reply);
    if (auto result = prover.receive(dev, to_prover)) {
      to_verifier = show(Direction::ToVerifier, *result);
      if (std::holds_alternative<AuthResult>(to_verifier) && !std::get<AuthResult>(to_verifier).c) {
        verifier.abort();
      }
    }
  }

  const bool ok = verifier.step() == VerifierStep::AwaitResult && prover.step() == ProverStep::Authenticated;
  if (!ok) {
    verifier.abort();
    std::cout << "CLOSED\n";
    return kExitFailure;
  }
  std::cout << "AUTHENTICATED\n";
  return kExitOk;
}

int cmd_scenario(const Options& o) {
  ScenarioConfig cfg = load_scenario_config(o.config);
  const ScenarioReport r = run_scenario(cfg);
  std::cout << ScenarioReport::kCsvHeader << '\n' << r.csv() << '\n';
  return kExitOk;
}

int cmd_timing(const Options& o) {
  if (o.preset != "paper") throw Error(ErrorCode::ConfigError, "unknown preset '" + o.preset + "'");
  if (o.frames == 0) throw Error(ErrorCode::ConfigError, "--frames must be >= 1");
  const CycleCosts costs = CycleCosts::paper();
  const TimingReport r = report(costs, o.frames);
  const double d_delta_us = r.d_delta_seconds * 1e6;
  const double overhead_pct = r.overhead_fraction * 100.0;
  if (o.csv) {
    std::printf("frames,cycles_without,cycles_with,t_delta_cycles,d_delta_us,overhead_pct\n");
    std::printf("%u,%llu,%llu,%llu,%.2f,%.2f\n", r.n_frames,
                static_cast<unsigned long long>(r.total_cycles_without),
                static_cast<unsigned long long>(r.total_cycles_with),
                static_cast<unsigned long long>(r.t_delta_cycles), d_delta_us, overhead_pct);
    return kExitOk;
  }
  std::printf("%-28s %12s %12s\n", "", "without", "with");
  std::printf("%-28s %12llu %12llu\n", "first frame (cycles)",
              static_cast<unsigned long long>(costs.first_frame_without),
              static_cast<unsigned long long>(costs.first_frame_with));
  std::printf("%-28s %12llu %12llu\n", "rest of frames (cycles)",
              static_cast<unsigned long long>(r.total_cycles_without - costs.first_frame_without),
              static_cast<unsigned long long>(r.total_cycles_with - costs.first_frame_with));
  std::printf("%-28s %12llu %12llu\n", "total cycles", static_cast<unsigned long long>(r.total_cycles_without),
              static_cast<unsigned long long>(r.total_cycles_with));
  std::printf("%-28s %12.0f %12.0f\n", "frequency (MHz)", costs.frequency_hz / 1e6, costs.frequency_hz / 1e6);
  std::printf("%-28s %12.2f %12.2f\n", "time (us)", r.time_without_seconds * 1e6, r.time_with_seconds * 1e6);
  std::printf("T_delta = %llu cycles\n", static_cast<unsigned long long>(r.t_delta_cycles));
  std::printf("D_delta = %.2fus\n", d_delta_us);
  std::printf("overhead = %.2f%% (~%.0f%%)\n", overhead_pct, overhead_pct);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure boot, attestation and recovery simulator"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--seed", o.seed, "RNG seed (SRACARE_SEED overrides)");

  auto* pack = app.add_subcommand("pack", "Split an image into signed 1 KB frames");
  pack->add_option("image", o.image)->required();
  pack->add_option("--key-hex", o.key_hex)->required();
  pack->add_option("-o,--output", o.output)->required();

  auto* mkrom = app.add_subcommand("mkrom", "Build a secure ROM container");
  mkrom->add_option("image", o.image)->required();
  mkrom->add_option("--key-hex", o.key_hex)->required();
  mkrom->add_option("--chip-info", o.chip_info, "36-byte chip info file")->required();
  mkrom->add_option("-o,--output", o.output)->required();

  auto* boot = app.add_subcommand("boot", "Run the secure bootstrap");
  boot->add_option("--rom", o.rom)->required();
  boot->add_option("--corrupt", o.corrupt, "flip payload bit: frame:bit");
  boot->add_flag("--no-resilience", o.no_resilience);

  auto* attest_cmd = app.add_subcommand("attest", "Authenticate, then attest a flash region");
  attest_cmd->add_option("--rom", o.rom)->required();
  attest_cmd->add_option("--addr", o.addr)->required();
  attest_cmd->add_option("--len", o.len)->required();

  auto* session = app.add_subcommand("session", "Run mutual authentication only");
  session->add_option("--rom", o.rom)->required();
  session->add_option("--verifier-key-hex", o.verifier_key_hex);

  auto* scenario = app.add_subcommand("scenario", "Run an attack scenario from a config file");
  scenario->add_option("config", o.config)->required();

  auto* timing = app.add_subcommand("timing", "Bootstrap timing model");
  timing->add_option("--frames", o.frames);
  timing->add_option("--preset", o.preset);
  timing->add_flag("--csv", o.csv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (const char* env = std::getenv("SRACARE_SEED")) o.seed = std::stoull(env);

    if (*pack) return cmd_pack(o);
    if (*mkrom) return cmd_mkrom(o);
    if (*boot) return cmd_boot(o);
    if (*attest_cmd) return cmd_attest(o);
    if (*session) return cmd_session(o);
    if (*scenario) return cmd_scenario(o);
    if (*timing) return cmd_timing(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::BadGoldenImage ? kExitFailure : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
