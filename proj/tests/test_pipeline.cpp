#include <catch2/catch_amalgamated.hpp>

#include <fitmap/pipeline.hpp>

#include "fixtures.hpp"

#include <filesystem>

using namespace fitmap;
namespace fs = std::filesystem;

namespace
{

fs::path fresh_dir( std::string const& name )
{
  auto const dir = fs::temp_directory_path() / "fitmap_tests" / name;
  fs::remove_all( dir );
  fs::create_directories( dir );
  return dir;
}

} // namespace

TEST_CASE( "the pipeline reproduces the two-versus-three crossbar outcome" )
{
  auto const dir = fresh_dir( "shared-input-demo" );
  auto const net_path = ( dir / "shared_input.snn.json" ).string();
  save_network( test::shared_input_network(), net_path );

  pipeline_config cfg;
  cfg.network_path = net_path;
  cfg.crossbar_n = 4;
  cfg.out_dir = ( dir / "out" ).string();
  cfg.seed = 3;
  cfg.write_csv = true;

  auto const result = run_pipeline( cfg );
  CHECK( result.report.baseline.crossbar_count == 3 );
  CHECK( result.report.proposed.crossbar_count == 2 );
  CHECK( result.report.baseline.dropped_synapse_count == 1 );
  CHECK( result.report.proposed.dropped_synapse_count == 0 );
  CHECK( result.report.proposed.max_rel_rate_error <= 1e-6 );
  CHECK( result.report.baseline.max_rel_rate_error > 0.0 );
  CHECK( result.report.proposed.argmax_match_rate == 1.0 );

  CHECK( fs::exists( result.baseline_map_path ) );
  CHECK( fs::exists( result.proposed_map_path ) );
  CHECK( fs::exists( result.report_path ) );
  CHECK( fs::exists( result.manifest_path ) );
  CHECK( fs::exists( fs::path( cfg.out_dir ) / "compare.csv" ) );

  auto const manifest = nlohmann::ordered_json::parse( read_text_file( result.manifest_path ) );
  CHECK( manifest["failed"] == false );
  CHECK( manifest["stages"].size() == 10 );
}

TEST_CASE( "a degenerate single-synapse network maps identically both ways" )
{
  auto const dir = fresh_dir( "degenerate" );
  pipeline_config cfg;
  cfg.layers = std::vector<std::size_t>{ 1, 1 };
  cfg.crossbar_n = 4;
  cfg.out_dir = dir.string();
  cfg.seed = 5;

  auto const result = run_pipeline( cfg );
  CHECK( result.report.baseline.crossbar_count == 1 );
  CHECK( result.report.proposed.crossbar_count == 1 );
  CHECK( result.report.ratios.at( "crossbar_count" ) == 1.0 );
  CHECK( result.report.baseline.dropped_synapse_count == 0 );
}

TEST_CASE( "pipeline reruns are byte-identical" )
{
  pipeline_config cfg;
  cfg.layers = std::vector<std::size_t>{ 12, 6, 3 };
  cfg.weights = weight_sampler::uniform( 0.01, 0.12 );
  cfg.crossbar_n = 8;
  cfg.seed = 11;

  auto const dir_a = fresh_dir( "rerun_a" );
  auto const dir_b = fresh_dir( "rerun_b" );
  cfg.out_dir = dir_a.string();
  auto const first = run_pipeline( cfg );
  cfg.out_dir = dir_b.string();
  auto const second = run_pipeline( cfg );

  CHECK( read_text_file( first.baseline_map_path ) == read_text_file( second.baseline_map_path ) );
  CHECK( read_text_file( first.proposed_map_path ) == read_text_file( second.proposed_map_path ) );
  CHECK( read_text_file( first.report_path ) == read_text_file( second.report_path ) );
  CHECK( read_text_file( first.manifest_path ) == read_text_file( second.manifest_path ) );
}

TEST_CASE( "a reservoir flows through the pipeline" )
{
  auto const dir = fresh_dir( "reservoir" );
  pipeline_config cfg;
  cfg.reservoir = reservoir_config{ 18, 0.3, 18 };
  cfg.crossbar_n = 8;
  cfg.out_dir = dir.string();
  cfg.seed = 7;

  auto const result = run_pipeline( cfg );
  CHECK( result.report.proposed.dropped_synapse_count == 0 );
  CHECK( result.report.proposed.max_rel_rate_error <= 1e-6 );
}

TEST_CASE( "a failing stage leaves a marked manifest behind" )
{
  auto const dir = fresh_dir( "failure" );
  pipeline_config cfg;
  cfg.network_path = ( dir / "missing.snn.json" ).string();
  cfg.out_dir = ( dir / "out" ).string();

  CHECK_THROWS_AS( run_pipeline( cfg ), error );
  auto const manifest = nlohmann::ordered_json::parse( read_text_file( ( fs::path( cfg.out_dir ) / "run_manifest.json" ).string() ) );
  CHECK( manifest["failed"] == true );
  CHECK( manifest["failed_stage"] == "ingest" );
}

TEST_CASE( "configuration errors are rejected up front" )
{
  pipeline_config neither;
  CHECK_THROWS_AS( run_pipeline( neither ), error );

  pipeline_config both;
  both.layers = std::vector<std::size_t>{ 2, 2 };
  both.reservoir = reservoir_config{ 4, 0.5, 0 };
  CHECK_THROWS_AS( run_pipeline( both ), error );
}

TEST_CASE( "error categories map to distinct exit codes" )
{
  CHECK( error( error_code::config, "" ).exit_code() == 2 );
  CHECK( error( error_code::validation, "" ).exit_code() == 3 );
  CHECK( error( error_code::capacity, "" ).exit_code() == 4 );
  CHECK( error( error_code::convergence, "" ).exit_code() == 5 );
}
