/* fitmap: spiking-network-to-crossbar mapping library
 * Copyright (C) 2026  The fitmap authors
 *
 * Permission is hereby granted, free of charge, to any person
 * obtaining a copy of this software and associated documentation
 * files (the "Software"), to deal in the Software without
 * restriction, including without limitation the rights to use,
 * copy, modify, merge, publish, distribute, sublicense, and/or sell
 * copies of the Software, and to permit persons to whom the
 * Software is furnished to do so, subject to the following
 * conditions:
 *
 * The above copyright notice and this permission notice shall be
 * included in all copies or substantial portions of the Software.
 *
 * THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND,
 * EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES
 * OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND
 * NONINFRINGEMENT. IN NO EVENT SHALL THE AUTHORS OR COPYRIGHT
 * HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY,
 * WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING
 * FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR
 * OTHER DEALINGS IN THE SOFTWARE.
 */

/*!
  \file pipeline.hpp
  \brief End-to-end pipeline: ingest, prune, unroll, normalize, recombine,
         map both variants, simulate, and report

  The pipeline is deterministic under a fixed seed: derived seeds for the
  calibration batch and reservoir drive come from the global seed, every
  stage validates its output before the next stage consumes it, and the
  written artifacts carry no timestamps, so reruns are byte-identical.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "decompose.hpp"
#include "error.hpp"
#include "mapper.hpp"
#include "metrics.hpp"
#include "network.hpp"
#include "network_io.hpp"
#include "normalize.hpp"
#include "rate_sim.hpp"
#include "version.hpp"

namespace fitmap
{

struct reservoir_config
{
  std::size_t size{ 0 };
  double connection_prob{ 0.1 };
  std::size_t drive_fanout{ 0 }; //!< 0 leaves the rate source unconnected
};

struct pipeline_config
{
  std::optional<std::string> network_path;            //!< load a .snn.json ...
  std::optional<std::vector<std::size_t>> layers;     //!< ... or generate feedforward ...
  std::optional<reservoir_config> reservoir;          //!< ... or generate a reservoir
  std::optional<weight_sampler> weights;

  double epsilon{ 0.0 };       //!< pruning threshold
  double k{ 1.0 };             //!< normalization scaling
  std::size_t crossbar_n{ 128 };
  std::optional<std::size_t> max_fanin;               //!< recombination bound, defaults to crossbar_n
  std::optional<std::size_t> crossbar_budget;

  std::optional<std::string> batch_path;
  std::size_t batch_size{ 8 };

  energy_model energy{};
  double window_s{ 1.0 };

  std::string out_dir{ "." };
  std::uint64_t seed{ 1 };
  bool write_csv{ false };

  sim_config solver{};
};

struct fidelity_result
{
  double max_rel_rate_error{ 0.0 };
  double argmax_match_rate{ 1.0 };
  rate_vector producer_rates; //!< batch-mean rates keyed by column id
};

namespace detail
{

inline sim_result simulate_or_throw( network const& net, rate_vector const& inputs, sim_config const& cfg,
                                     std::string const& stage )
{
  auto result = simulate( net, inputs, cfg );
  if ( !result.converged )
  {
    std::ostringstream os;
    os << stage << ": fixed point did not converge after " << result.iterations << " iterations (residual " << result.residual << ")";
    throw error( error_code::convergence, os.str() );
  }
  return result;
}

inline std::vector<neuron_id> output_ids( network const& net )
{
  std::vector<neuron_id> out;
  for ( auto const& n : net.neurons )
  {
    if ( n.kind == neuron_kind::output )
      out.push_back( n.id );
  }
  std::sort( out.begin(), out.end() );
  return out;
}

inline void accumulate_mean( rate_vector& mean, rate_vector const& sample, double inv_count )
{
  for ( auto const& [id, rate] : sample )
  {
    mean[id] += rate * inv_count;
  }
}

} // namespace detail

/*! \brief Fidelity of the truncated baseline network against the original.
 *
 * The rate error is measured with saturation disabled on both sides (pure
 * structural fidelity); the argmax match runs with saturation enabled.
 */
inline fidelity_result baseline_fidelity( network const& original, network const& truncated,
                                          std::vector<rate_vector> const& batch, sim_config const& cfg )
{
  fidelity_result out;
  auto const outputs = detail::output_ids( original );
  auto const original_off = without_saturation( original );
  auto const truncated_off = without_saturation( truncated );
  double const inv = 1.0 / static_cast<double>( batch.size() );
  std::size_t matches = 0;
  for ( auto const& sample : batch )
  {
    auto const ref_on = detail::simulate_or_throw( original, sample, cfg, "reference simulation" );
    auto const ref_off = detail::simulate_or_throw( original_off, sample, cfg, "reference simulation (saturation off)" );
    auto const test_on = detail::simulate_or_throw( truncated, sample, cfg, "baseline simulation" );
    auto const test_off = detail::simulate_or_throw( truncated_off, sample, cfg, "baseline simulation (saturation off)" );
    out.max_rel_rate_error = std::max( out.max_rel_rate_error, rate_error( ref_off.rates, test_off.rates, outputs ).max_rel_error );
    if ( argmax_rate( test_on.rates, outputs ) == argmax_rate( ref_on.rates, outputs ) )
      ++matches;
    detail::accumulate_mean( out.producer_rates, test_on.rates, inv );
  }
  out.argmax_match_rate = batch.empty() ? 1.0 : static_cast<double>( matches ) / static_cast<double>( batch.size() );
  return out;
}

/*! \brief Fidelity of a (normalized) unit network against the original.
 *
 * Unit rates are projected back to origin neurons and de-normalized by the
 * per-neuron scale before comparison.
 */
inline fidelity_result proposed_fidelity( network const& original, unit_network const& unet,
                                          std::vector<rate_vector> const& batch, sim_config const& cfg )
{
  fidelity_result out;
  auto const outputs = detail::output_ids( original );
  auto const unit_net = flatten_to_network( unet );
  auto const original_off = without_saturation( original );
  auto const unit_net_off = without_saturation( unit_net );
  double const inv = 1.0 / static_cast<double>( batch.size() );
  std::size_t matches = 0;
  for ( auto const& sample : batch )
  {
    auto const ref_on = detail::simulate_or_throw( original, sample, cfg, "reference simulation" );
    auto const ref_off = detail::simulate_or_throw( original_off, sample, cfg, "reference simulation (saturation off)" );
    auto const test_on = detail::simulate_or_throw( unit_net, sample, cfg, "unit network simulation" );
    auto const test_off = detail::simulate_or_throw( unit_net_off, sample, cfg, "unit network simulation (saturation off)" );

    auto const projected_off = project_origin_rates( unet, test_off.rates, true );
    out.max_rel_rate_error = std::max( out.max_rel_rate_error, rate_error( ref_off.rates, projected_off, outputs ).max_rel_error );
    auto const projected_on = project_origin_rates( unet, test_on.rates, true );
    if ( argmax_rate( projected_on, outputs ) == argmax_rate( ref_on.rates, outputs ) )
      ++matches;
    detail::accumulate_mean( out.producer_rates, test_on.rates, inv );
  }
  out.argmax_match_rate = batch.empty() ? 1.0 : static_cast<double>( matches ) / static_cast<double>( batch.size() );
  return out;
}

struct pipeline_result
{
  compare_report_t report;
  std::string baseline_map_path;
  std::string proposed_map_path;
  std::string report_path;
  std::string manifest_path;
};

/*! \brief Runs the whole flow and writes baseline.map.json, proposed.map.json,
 *         compare.report.json, and run_manifest.json into the output directory.
 *
 * On a stage failure the partial outputs stay on disk and the manifest is
 * written with a `failed` marker naming the stage before the error is
 * rethrown.
 */
inline pipeline_result run_pipeline( pipeline_config const& cfg )
{
  namespace fs = std::filesystem;

  if ( cfg.crossbar_n < 2 )
    throw error( error_code::config, "pipeline: crossbar n must be >= 2" );
  if ( !( cfg.k > 0.0 ) )
    throw error( error_code::config, "pipeline: k must be positive" );
  int source_count = ( cfg.network_path ? 1 : 0 ) + ( cfg.layers ? 1 : 0 ) + ( cfg.reservoir ? 1 : 0 );
  if ( source_count != 1 )
    throw error( error_code::config, "pipeline: specify exactly one of network path, layers, or reservoir" );

  fs::create_directories( cfg.out_dir );
  auto path_in_out = [&]( std::string const& name ) { return ( fs::path( cfg.out_dir ) / name ).string(); };

  nlohmann::ordered_json manifest;
  manifest["version"] = 1;
  manifest["tool"] = "fitmap";
  manifest["tool_version"] = version_string;
  {
    nlohmann::ordered_json jc;
    jc["network_path"] = cfg.network_path ? nlohmann::ordered_json( *cfg.network_path ) : nlohmann::ordered_json( nullptr );
    jc["layers"] = cfg.layers ? nlohmann::ordered_json( *cfg.layers ) : nlohmann::ordered_json( nullptr );
    if ( cfg.reservoir )
    {
      jc["reservoir"] = { { "size", cfg.reservoir->size }, { "connection_prob", cfg.reservoir->connection_prob }, { "drive_fanout", cfg.reservoir->drive_fanout } };
    }
    else
    {
      jc["reservoir"] = nullptr;
    }
    jc["weights"] = cfg.weights ? nlohmann::ordered_json( cfg.weights->to_string() ) : nlohmann::ordered_json( nullptr );
    jc["epsilon"] = cfg.epsilon;
    jc["k"] = cfg.k;
    jc["crossbar_n"] = cfg.crossbar_n;
    jc["max_fanin"] = cfg.max_fanin ? nlohmann::ordered_json( *cfg.max_fanin ) : nlohmann::ordered_json( nullptr );
    jc["crossbar_budget"] = cfg.crossbar_budget ? nlohmann::ordered_json( *cfg.crossbar_budget ) : nlohmann::ordered_json( nullptr );
    jc["batch_path"] = cfg.batch_path ? nlohmann::ordered_json( *cfg.batch_path ) : nlohmann::ordered_json( nullptr );
    jc["batch_size"] = cfg.batch_size;
    jc["batch_seed"] = cfg.seed + 1;
    jc["drive_seed"] = cfg.seed + 2;
    jc["window_s"] = cfg.window_s;
    jc["seed"] = cfg.seed;
    jc["energy"] = { { "e_spike", cfg.energy.e_spike }, { "e_route", cfg.energy.e_route }, { "e_idle_neuron", cfg.energy.e_idle_neuron }, { "e_idle_synapse", cfg.energy.e_idle_synapse }, { "switch_bandwidth_events_per_s", cfg.energy.switch_bandwidth_events_per_s } };
    manifest["config"] = jc;
  }
  manifest["stages"] = nlohmann::ordered_json::array();
  manifest["failed"] = false;

  pipeline_result result;
  auto write_manifest = [&]() {
    result.manifest_path = path_in_out( "run_manifest.json" );
    write_text_file( result.manifest_path, manifest.dump( 2 ) + "\n" );
  };

  std::string current_stage = "ingest";
  auto stage_done = [&]( std::string const& name ) {
    manifest["stages"].push_back( { { "name", name }, { "status", "ok" } } );
  };

  try
  {
    // ingest or generate
    network net;
    if ( cfg.network_path )
    {
      net = load_network( *cfg.network_path );
    }
    else if ( cfg.layers )
    {
      net = generate_feedforward( *cfg.layers, cfg.weights.value_or( weight_sampler::uniform( 0.0, 1.0 ) ), cfg.seed );
    }
    else
    {
      net = generate_reservoir( cfg.reservoir->size, cfg.reservoir->connection_prob, cfg.seed, cfg.weights );
      if ( cfg.reservoir->drive_fanout > 0 )
      {
        attach_input_drive( net, cfg.reservoir->drive_fanout, weight_sampler::uniform( 0.5, 1.0 ), cfg.seed + 2 );
      }
    }
    {
      auto const report = validate_network( net );
      if ( !report.ok() )
      {
        throw error( error_code::validation, "source network is invalid: " + report.violations.front().message );
      }
    }
    stage_done( "ingest" );

    // prune
    current_stage = "prune";
    auto const pruned = prune_weights( net, cfg.epsilon );
    {
      auto const report = validate_network( pruned.net );
      if ( !report.ok() )
        throw error( error_code::validation, "pruned network is invalid: " + report.violations.front().message );
    }
    manifest["pruned_synapses"] = pruned.removed_count;
    stage_done( "prune" );

    // calibration batch
    current_stage = "batch";
    rate_batch batch = cfg.batch_path ? load_batch( *cfg.batch_path ) : random_batch( pruned.net, cfg.batch_size, cfg.seed + 1 );
    if ( batch.samples.empty() )
    {
      throw error( error_code::config, "calibration batch is empty" );
    }
    stage_done( "batch" );

    crossbar_spec const spec{ cfg.crossbar_n, cfg.crossbar_budget };
    auto const fingerprint = network_fingerprint( pruned.net );

    // baseline path
    current_stage = "map_baseline";
    auto const baseline_map = map_baseline( pruned.net, spec );
    {
      auto const report = verify_mapping( baseline_map, pruned.net, spec );
      if ( !report.ok() )
        throw error( error_code::validation, "baseline mapping failed verification: " + report.violations.front().message );
    }
    result.baseline_map_path = path_in_out( "baseline.map.json" );
    write_text_file( result.baseline_map_path, serialize_mapping( baseline_map ) );
    stage_done( "map_baseline" );

    // proposed path
    current_stage = "unroll";
    auto const unrolled = unroll_network( pruned.net );
    stage_done( "unroll" );

    current_stage = "normalize";
    auto const stats = collect_activation_stats( pruned.net, batch.vectors(), cfg.solver );
    auto const plan = normalization_factors( stats, cfg.k );
    auto const normalized = apply_normalization( unrolled, plan );
    manifest["normalization_warnings"] = plan.warnings.size();
    stage_done( "normalize" );

    current_stage = "recombine";
    auto const subunits = recombine( normalized, cfg.max_fanin.value_or( cfg.crossbar_n ) );
    stage_done( "recombine" );

    current_stage = "map_proposed";
    auto const proposed_map = pack_proposed( subunits, spec );
    {
      auto const report = verify_mapping( proposed_map, subunits, spec );
      if ( !report.ok() )
        throw error( error_code::validation, "proposed mapping failed verification: " + report.violations.front().message );
    }
    result.proposed_map_path = path_in_out( "proposed.map.json" );
    write_text_file( result.proposed_map_path, serialize_mapping( proposed_map ) );
    stage_done( "map_proposed" );

    // fidelity
    current_stage = "simulate";
    auto const truncated = apply_drops( pruned.net, baseline_map.dropped );
    auto const base_fid = baseline_fidelity( pruned.net, truncated, batch.vectors(), cfg.solver );
    auto const prop_fid = proposed_fidelity( pruned.net, subunits, batch.vectors(), cfg.solver );
    stage_done( "simulate" );

    // report
    current_stage = "report";
    variant_inputs base_in{ baseline_map, fingerprint, base_fid.max_rel_rate_error, base_fid.argmax_match_rate, base_fid.producer_rates };
    variant_inputs prop_in{ proposed_map, fingerprint, prop_fid.max_rel_rate_error, prop_fid.argmax_match_rate, prop_fid.producer_rates };
    result.report = compare_report( base_in, prop_in, spec, cfg.energy, cfg.window_s );
    result.report.source_name = net.metadata.count( "topology" ) ? net.metadata.at( "topology" ) : ( cfg.network_path ? *cfg.network_path : "network" );
    result.report.source_neurons = pruned.net.neurons.size();
    result.report.source_synapses = pruned.net.synapses.size();
    result.report_path = path_in_out( "compare.report.json" );
    write_text_file( result.report_path, serialize_report( result.report ) );
    if ( cfg.write_csv )
    {
      write_text_file( path_in_out( "compare.csv" ), report_csv( baseline_map, proposed_map ) );
    }
    stage_done( "report" );

    write_manifest();
    return result;
  }
  catch ( std::exception const& e )
  {
    manifest["failed"] = true;
    manifest["failed_stage"] = current_stage;
    manifest["error"] = e.what();
    write_manifest();
    throw;
  }
}

} // namespace fitmap
