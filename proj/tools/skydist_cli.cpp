// skydist: skyline extraction, variability metrics and distance fits.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skydist/pipeline.hpp"

namespace pl = skydist::pipeline;

namespace {

std::vector<int> parse_edges(const std::string& text) {
    std::vector<int> edges;
    for (auto tok : skydist::split(text, ',')) {
        edges.push_back(static_cast<int>(skydist::parse_int(tok, "bucket edge")));
    }
    return edges;
}

pl::CrfPair parse_pair(const std::string& text) {
    const auto sep = text.find(':');
    if (sep == std::string::npos) throw pl::UsageError("pair must be <with.csv>:<without.csv>, got '" + text + "'");
    return {text.substr(0, sep), text.substr(sep + 1)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skyline variability metrics and power-law distance fits"};
    app.require_subcommand(1);

    std::string groups, out = ".", window;
    int jobs = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--groups", groups, "class-group config (default: built-in synthetic ids)");
        sub->add_option("--out", out, "output directory")->capture_default_str();
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 64))->capture_default_str();
    };

    pl::ExtractOptions ex;
    bool no_filter = false;
    auto* extract = app.add_subcommand("extract", "extract skyline and segment CSVs from label masks");
    add_common(extract);
    extract->add_option("masks", ex.masks, "mask files (LMASK 1 format)")->required();
    extract->add_flag("--no-filter", no_filter, "keep images failing the sky/tree filters");
    extract->add_option("--theta", ex.theta, "sky fraction required in the top 10 rows")->capture_default_str();

    std::string skylines, refs;
    auto add_dataset = [&](CLI::App* sub) {
        sub->add_option("--skylines", skylines, "directory of *.skyline.csv files")->required();
        sub->add_option("--refs", refs, "reference point CSV (point_id,x,y,distance_m)")->required();
    };

    auto* analyze = app.add_subcommand("analyze", "compute metrics and fit metric-vs-distance models");
    add_common(analyze);
    add_dataset(analyze);
    window = "none";
    analyze->add_option("--window", window, "L, none, a list, or lo:hi:step (hi may be 2W)")->capture_default_str();

    std::string sweep_grid;
    auto* sweep = app.add_subcommand("sweep", "R^2 as a function of the window length");
    add_common(sweep);
    add_dataset(sweep);
    sweep->add_option("--window", sweep_grid, "window grid (default 25:2W:25)");

    pl::ProfilesOptions prof;
    std::string edges = "200,400,800";
    auto* profiles = app.add_subcommand("profiles", "export mean-centred profiles aligned on reference points");
    add_common(profiles);
    add_dataset(profiles);
    profiles->add_option("--group", prof.group, "analysis group, or empty for all")->capture_default_str();
    profiles->add_option("--buckets", edges, "segment-width bucket edges")->capture_default_str();

    std::vector<std::string> pairs;
    pl::CrfOptions crf;
    auto* gain = app.add_subcommand("crf-gain", "length gain of refined over unrefined skylines");
    add_common(gain);
    gain->add_option("pairs", pairs, "<with.csv>:<without.csv> skyline CSV pairs")->required();
    gain->add_option("--bin-width", crf.bin_width, "histogram bin width")->capture_default_str();

    pl::SynthOptions syn;
    std::uint64_t seed = 0;
    auto* synth = app.add_subcommand("synth", "render a synthetic experiment with known distances");
    add_common(synth);
    synth->add_option("--manifest", syn.manifest_path, "experiment manifest JSON (default: 40 x 5 tree scenes)");
    synth->add_option("--seed", seed, "single seed overriding the manifest seeds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : pl::kExitInvalid;
    }

    try {
        if (*extract) {
            ex.groups_path = groups;
            ex.out_dir = out;
            ex.jobs = jobs;
            ex.filter = !no_filter;
            const auto res = pl::run_extract(ex);
            for (const auto& it : res.items) {
                if (it.status != "processed") std::cerr << it.status << ": " << it.reason << "  " << it.path << '\n';
            }
            return res.exit_code;
        }
        if (*analyze) {
            return pl::run_analyze({skylines, refs, groups, window, out, jobs});
        }
        if (*sweep) {
            return pl::run_sweep({skylines, refs, groups, sweep_grid, out, jobs});
        }
        if (*profiles) {
            prof.skyline_dir = skylines;
            prof.refs_path = refs;
            prof.groups_path = groups;
            prof.bucket_edges = parse_edges(edges);
            prof.out_dir = out;
            return pl::run_profiles(prof);
        }
        if (*gain) {
            for (const auto& p : pairs) crf.pairs.push_back(parse_pair(p));
            crf.out_dir = out;
            return pl::run_crf_gain(crf);
        }
        if (*synth) {
            syn.out_dir = out;
            syn.jobs = jobs;
            syn.seed = synth->count("--seed") ? std::optional<std::uint64_t>(seed) : std::nullopt;
            return pl::run_synth(syn);
        }
    } catch (const pl::UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return pl::kExitInvalid;
    } catch (const skydist::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return pl::kExitInvalid;
    }
    return pl::kExitInvalid;
}
