#include <iostream>

#include <CLI11.hpp>

#include "k3lidar/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"k3lidar: compact octree index for LiDAR point clouds"};
  app.require_subcommand(1);

  k3lidar::cli::BuildArgs build_args;
  auto* build = app.add_subcommand("build", "build an index from a LAS file");
  build->add_option("las", build_args.las_path, "input LAS file (PDRF 0)")
      ->required();
  build->add_option("-o,--output", build_args.index_path, "output index file")
      ->required();
  build->add_option("-k", build_args.k, "branching base per axis")
      ->default_val(2);
  build->add_option("-l", build_args.leaf_threshold, "leaf point threshold")
      ->default_val(100);

  k3lidar::cli::QueryArgs query_args;
  std::string attr_text;
  auto* query = app.add_subcommand("query", "run a region query");
  query->add_option("index", query_args.index_path, "index file")->required();
  query->add_option("--region", query_args.region, "x1:y1:z1:x2:y2:z2")
      ->required();
  query->add_option("--attr", attr_text, "attribute filter NAME:LO:HI");
  query->add_flag("--real", query_args.real_coords,
                  "region and output in real-world coordinates");
  query->add_option("--format", query_args.format, "text, csv or las")
      ->default_val("text");
  std::string query_out;
  query->add_option("-o,--output", query_out, "write results to a file");

  k3lidar::cli::StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "print index statistics");
  stats->add_option("index", stats_args.index_path, "index file")->required();

  k3lidar::cli::ExportArgs export_args;
  auto* exp = app.add_subcommand("export", "export an index back to LAS");
  exp->add_option("index", export_args.index_path, "index file")->required();
  exp->add_option("-o,--output", export_args.las_path, "output LAS file")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (build->parsed())
    return k3lidar::cli::cmd_build(build_args, std::cout, std::cerr);
  if (query->parsed()) {
    if (!attr_text.empty()) query_args.attr = attr_text;
    if (!query_out.empty()) query_args.output_path = query_out;
    return k3lidar::cli::cmd_query(query_args, std::cout, std::cerr);
  }
  if (stats->parsed())
    return k3lidar::cli::cmd_stats(stats_args, std::cout, std::cerr);
  if (exp->parsed())
    return k3lidar::cli::cmd_export(export_args, std::cout, std::cerr);
  return 1;
}
