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
  \file fitmap.cpp
  \brief Command-line frontend

  Subcommands mirror the pipeline stages so each is independently
  scriptable: gen, prune, unroll, normalize, map, simulate, compare, and
  the composite pipeline.  Exit codes: 0 success, 2 configuration error,
  3 validation failure, 4 capacity or budget failure, 5 simulator
  non-convergence.
*/

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <fitmap/decompose.hpp>
#include <fitmap/error.hpp>
#include <fitmap/mapper.hpp>
#include <fitmap/metrics.hpp>
#include <fitmap/network.hpp>
#include <fitmap/network_io.hpp>
#include <fitmap/normalize.hpp>
#include <fitmap/pipeline.hpp>
#include <fitmap/rate_sim.hpp>
#include <fitmap/version.hpp>

namespace
{

std::vector<std::size_t> parse_layer_list( std::string const& text )
{
  std::vector<std::size_t> layers;
  std::stringstream ss( text );
  std::string item;
  while ( std::getline( ss, item, ',' ) )
  {
    try
    {
      layers.push_back( std::stoul( item ) );
    }
    catch ( std::exception const& )
    {
      throw fitmap::error( fitmap::error_code::config, "cannot parse layer list '" + text + "'" );
    }
  }
  return layers;
}

struct generator_options
{
  std::string layers;
  std::size_t reservoir_size{ 0 };
  double connection_prob{ 0.1 };
  std::size_t drive_fanout{ 0 };
  std::string weights;
  std::uint64_t seed{ 1 };

  void attach( CLI::App* cmd )
  {
    cmd->add_option( "--layers", layers, "feedforward layer sizes, e.g. 784,100,10" );
    cmd->add_option( "--reservoir-size", reservoir_size, "number of recurrent core neurons" );
    cmd->add_option( "--connection-prob", connection_prob, "reservoir connection probability" )->check( CLI::Range( 0.0, 1.0 ) );
    cmd->add_option( "--drive-fanout", drive_fanout, "wire the reservoir rate source into this many core neurons" );
    cmd->add_option( "--weights", weights, "weight sampler: uniform:lo:hi, normal:mean:stddev, or constant:v" );
    cmd->add_option( "--seed", seed, "generator seed" );
  }

  fitmap::network build() const
  {
    std::optional<fitmap::weight_sampler> sampler;
    if ( !weights.empty() )
      sampler = fitmap::weight_sampler::parse( weights );
    if ( !layers.empty() && reservoir_size > 0 )
    {
      throw fitmap::error( fitmap::error_code::config, "choose either --layers or --reservoir-size" );
    }
    if ( !layers.empty() )
    {
      return fitmap::generate_feedforward( parse_layer_list( layers ), sampler.value_or( fitmap::weight_sampler::uniform( 0.0, 1.0 ) ), seed );
    }
    if ( reservoir_size > 0 )
    {
      auto net = fitmap::generate_reservoir( reservoir_size, connection_prob, seed, sampler );
      if ( drive_fanout > 0 )
      {
        fitmap::attach_input_drive( net, drive_fanout, fitmap::weight_sampler::uniform( 0.5, 1.0 ), seed + 2 );
      }
      return net;
    }
    throw fitmap::error( fitmap::error_code::config, "specify --layers or --reservoir-size" );
  }
};

fitmap::network load_and_validate( std::string const& path )
{
  auto net = fitmap::load_network( path );
  auto const report = fitmap::validate_network( net );
  if ( !report.ok() )
  {
    throw fitmap::error( fitmap::error_code::validation, path + ": " + report.violations.front().message );
  }
  return net;
}

std::vector<fitmap::rate_vector> resolve_batch( fitmap::network const& net, std::string const& batch_path,
                                                std::size_t batch_size, std::uint64_t seed )
{
  if ( !batch_path.empty() )
  {
    return fitmap::load_batch( batch_path ).vectors();
  }
  return fitmap::random_batch( net, batch_size, seed ).vectors();
}

fitmap::unit_network prepare_units( fitmap::network const& net, std::optional<std::size_t> max_fanin, std::size_t fallback )
{
  return fitmap::recombine( fitmap::unroll_network( net ), max_fanin.value_or( fallback ) );
}

} // namespace

int main( int argc, char** argv )
{
  CLI::App app{ "fitmap: maps spiking networks onto tile-based crossbar hardware" };
  app.require_subcommand( 1 );
  app.set_version_flag( "--version", fitmap::version_string );

  /* gen */
  auto* gen = app.add_subcommand( "gen", "generate a synthetic network" );
  generator_options gen_opts;
  gen_opts.attach( gen );
  std::string gen_out;
  gen->add_option( "--out", gen_out, "output .snn.json path" )->required();

  /* prune */
  auto* prune = app.add_subcommand( "prune", "remove near-zero weights" );
  std::string prune_net, prune_out;
  double prune_epsilon = 0.0;
  prune->add_option( "--network", prune_net, "input .snn.json" )->required();
  prune->add_option( "--epsilon", prune_epsilon, "magnitude threshold" )->required();
  prune->add_option( "--out", prune_out, "output .snn.json path" )->required();

  /* unroll */
  auto* unroll = app.add_subcommand( "unroll", "decompose high-fanin neurons into unit chains" );
  std::string unroll_net, unroll_out;
  std::optional<std::size_t> unroll_max_fanin;
  unroll->add_option( "--network", unroll_net, "input .snn.json" )->required();
  unroll->add_option( "--max-fanin", unroll_max_fanin, "recombine chains to this input bound" );
  unroll->add_option( "--out", unroll_out, "annotated unit network output path" )->required();

  /* normalize */
  auto* normalize = app.add_subcommand( "normalize", "unroll and rescale weights from batch activation maxima" );
  std::string norm_net, norm_batch, norm_out, norm_plan_out;
  double norm_k = 1.0;
  std::size_t norm_batch_size = 8;
  std::uint64_t norm_seed = 1;
  std::optional<std::size_t> norm_max_fanin;
  normalize->add_option( "--network", norm_net, "input .snn.json" )->required();
  normalize->add_option( "--batch", norm_batch, "calibration batch .rates.json" );
  normalize->add_option( "--batch-size", norm_batch_size, "random batch size when no file is given" );
  normalize->add_option( "--seed", norm_seed, "random batch seed" );
  normalize->add_option( "--k", norm_k, "rate-limiting scale factor" );
  normalize->add_option( "--max-fanin", norm_max_fanin, "recombine after normalization" );
  normalize->add_option( "--out", norm_out, "annotated unit network output path" )->required();
  normalize->add_option( "--plan-out", norm_plan_out, "write stage factors as JSON" );

  /* map */
  auto* map_cmd = app.add_subcommand( "map", "assign units or neurons to crossbars" );
  std::string map_net, map_units, map_variant = "both", map_out_dir = ".";
  std::size_t map_n = 128;
  std::optional<std::size_t> map_max_fanin, map_budget;
  map_cmd->add_option( "--network", map_net, "input .snn.json" );
  map_cmd->add_option( "--units", map_units, "annotated unit network (proposed variant input)" );
  map_cmd->add_option( "--crossbar-n", map_n, "crossbar inputs = outputs" )->required();
  map_cmd->add_option( "--variant", map_variant, "baseline, proposed, or both" )->check( CLI::IsMember( { "baseline", "proposed", "both" } ) );
  map_cmd->add_option( "--max-fanin", map_max_fanin, "recombination bound (default: crossbar n)" );
  map_cmd->add_option( "--budget", map_budget, "maximum crossbar count" );
  map_cmd->add_option( "--out-dir", map_out_dir, "directory for .map.json outputs" );

  /* simulate */
  auto* simulate_cmd = app.add_subcommand( "simulate", "evaluate mean firing rates" );
  std::string sim_net, sim_inputs, sim_out;
  std::size_t sim_batch_size = 1;
  std::uint64_t sim_seed = 1;
  bool sim_no_saturation = false;
  simulate_cmd->add_option( "--network", sim_net, "input .snn.json" )->required();
  simulate_cmd->add_option( "--inputs", sim_inputs, "input rates .rates.json" );
  simulate_cmd->add_option( "--batch-size", sim_batch_size, "random batch size when no file is given" );
  simulate_cmd->add_option( "--seed", sim_seed, "random batch seed" );
  simulate_cmd->add_flag( "--no-saturation", sim_no_saturation, "simulate with the rate clamp removed" );
  simulate_cmd->add_option( "--out", sim_out, "write resulting rates as JSON" );

  /* compare */
  auto* compare_cmd = app.add_subcommand( "compare", "evaluate baseline and proposed mappings side by side" );
  std::string cmp_net, cmp_batch, cmp_out;
  std::size_t cmp_n = 128, cmp_batch_size = 8;
  double cmp_k = 1.0, cmp_epsilon = 0.0, cmp_window = 1.0;
  std::uint64_t cmp_seed = 1;
  std::optional<std::size_t> cmp_max_fanin;
  compare_cmd->add_option( "--network", cmp_net, "input .snn.json" )->required();
  compare_cmd->add_option( "--crossbar-n", cmp_n, "crossbar inputs = outputs" )->required();
  compare_cmd->add_option( "--max-fanin", cmp_max_fanin, "recombination bound (default: crossbar n)" );
  compare_cmd->add_option( "--epsilon", cmp_epsilon, "pruning threshold" );
  compare_cmd->add_option( "--k", cmp_k, "normalization scale" );
  compare_cmd->add_option( "--batch", cmp_batch, "calibration batch .rates.json" );
  compare_cmd->add_option( "--batch-size", cmp_batch_size, "random batch size" );
  compare_cmd->add_option( "--seed", cmp_seed, "seed" );
  compare_cmd->add_option( "--window", cmp_window, "interconnect observation window in seconds" );
  compare_cmd->add_option( "--out", cmp_out, "report output path" )->required();

  /* pipeline */
  auto* pipeline_cmd = app.add_subcommand( "pipeline", "run the full flow and write all artifacts" );
  generator_options pipe_gen;
  pipe_gen.attach( pipeline_cmd );
  std::string pipe_net, pipe_batch, pipe_out_dir;
  double pipe_epsilon = 0.0, pipe_k = 1.0, pipe_window = 1.0;
  std::size_t pipe_n = 128, pipe_batch_size = 8;
  std::optional<std::size_t> pipe_max_fanin, pipe_budget;
  bool pipe_csv = false;
  fitmap::energy_model pipe_energy;
  pipeline_cmd->add_option( "--network", pipe_net, "input .snn.json (alternative to the generator flags)" );
  pipeline_cmd->add_option( "--epsilon", pipe_epsilon, "pruning threshold" );
  pipeline_cmd->add_option( "--k", pipe_k, "normalization scale" );
  pipeline_cmd->add_option( "--crossbar-n", pipe_n, "crossbar inputs = outputs" );
  pipeline_cmd->add_option( "--max-fanin", pipe_max_fanin, "recombination bound (default: crossbar n)" );
  pipeline_cmd->add_option( "--budget", pipe_budget, "maximum crossbar count" );
  pipeline_cmd->add_option( "--batch", pipe_batch, "calibration batch .rates.json" );
  pipeline_cmd->add_option( "--batch-size", pipe_batch_size, "random batch size" );
  pipeline_cmd->add_option( "--window", pipe_window, "interconnect observation window in seconds" );
  pipeline_cmd->add_option( "--e-spike", pipe_energy.e_spike, "energy per spike in joules" );
  pipeline_cmd->add_option( "--e-route", pipe_energy.e_route, "energy per routing event in joules" );
  pipeline_cmd->add_option( "--e-idle-neuron", pipe_energy.e_idle_neuron, "accounting energy per unused neuron cell" );
  pipeline_cmd->add_option( "--e-idle-synapse", pipe_energy.e_idle_synapse, "accounting energy per unused synapse cell" );
  pipeline_cmd->add_flag( "--csv", pipe_csv, "also write per-crossbar rows" );
  pipeline_cmd->add_option( "--out", pipe_out_dir, "output directory" )->required();

  try
  {
    app.parse( argc, argv );
  }
  catch ( CLI::ParseError const& e )
  {
    if ( e.get_exit_code() == 0 )
    {
      return app.exit( e );
    }
    app.exit( e );
    return 2;
  }

  try
  {
    if ( gen->parsed() )
    {
      auto const net = gen_opts.build();
      fitmap::save_network( net, gen_out );
      std::cout << "wrote " << gen_out << ": " << net.neurons.size() << " neurons, " << net.synapses.size() << " synapses\n";
    }
    else if ( prune->parsed() )
    {
      auto const net = load_and_validate( prune_net );
      auto const result = fitmap::prune_weights( net, prune_epsilon );
      fitmap::save_network( result.net, prune_out );
      std::cout << "removed " << result.removed_count << " of " << net.synapses.size() << " synapses\n";
    }
    else if ( unroll->parsed() )
    {
      auto const net = load_and_validate( unroll_net );
      auto unet = fitmap::unroll_network( net );
      std::cout << "unit-count formula: " << fitmap::fit_unit_count( net ) << ", realized units: " << unet.units.size() << "\n";
      if ( unroll_max_fanin )
      {
        unet = fitmap::recombine( unet, *unroll_max_fanin );
        std::cout << "recombined at max fanin " << *unroll_max_fanin << ": " << unet.units.size() << " subunits\n";
      }
      fitmap::save_network( fitmap::to_annotated_network( unet ), unroll_out );
      std::cout << "wrote " << unroll_out << "\n";
    }
    else if ( normalize->parsed() )
    {
      auto const net = load_and_validate( norm_net );
      auto const batch = resolve_batch( net, norm_batch, norm_batch_size, norm_seed + 1 );
      auto const stats = fitmap::collect_activation_stats( net, batch );
      auto const plan = fitmap::normalization_factors( stats, norm_k );
      auto unet = fitmap::apply_normalization( fitmap::unroll_network( net ), plan );
      if ( norm_max_fanin )
      {
        unet = fitmap::recombine( unet, *norm_max_fanin );
      }
      fitmap::save_network( fitmap::to_annotated_network( unet ), norm_out );
      for ( auto const& warning : plan.warnings )
      {
        std::cerr << "warning: " << warning << "\n";
      }
      if ( !norm_plan_out.empty() )
      {
        nlohmann::ordered_json doc;
        doc["version"] = 1;
        doc["k"] = plan.k;
        doc["stage_factors"] = nlohmann::ordered_json::object();
        for ( auto const& [origin, factors] : plan.stage_factors )
        {
          doc["stage_factors"][std::to_string( origin )] = factors;
        }
        doc["warnings"] = plan.warnings;
        fitmap::write_text_file( norm_plan_out, doc.dump( 2 ) + "\n" );
      }
      std::cout << "wrote " << norm_out << " (" << unet.units.size() << " units, " << plan.warnings.size() << " warnings)\n";
    }
    else if ( map_cmd->parsed() )
    {
      namespace fs = std::filesystem;
      fitmap::crossbar_spec const spec{ map_n, map_budget };
      fs::create_directories( map_out_dir );
      if ( map_net.empty() && map_units.empty() )
      {
        throw fitmap::error( fitmap::error_code::config, "map needs --network or --units" );
      }
      if ( map_variant != "proposed" )
      {
        if ( map_net.empty() )
          throw fitmap::error( fitmap::error_code::config, "the baseline variant needs --network" );
        auto const net = load_and_validate( map_net );
        auto const m = fitmap::map_baseline( net, spec );
        auto const report = fitmap::verify_mapping( m, net, spec );
        if ( !report.ok() )
          throw fitmap::error( fitmap::error_code::validation, report.violations.front().message );
        auto const path = ( fs::path( map_out_dir ) / "baseline.map.json" ).string();
        fitmap::write_text_file( path, fitmap::serialize_mapping( m ) );
        std::cout << "baseline: " << m.crossbars.size() << " crossbars, " << m.dropped.size() << " dropped synapses -> " << path << "\n";
      }
      if ( map_variant != "baseline" )
      {
        fitmap::unit_network unet;
        if ( !map_units.empty() )
        {
          unet = fitmap::from_annotated_network( fitmap::load_network( map_units ) );
          if ( !unet.recombined )
            unet = fitmap::recombine( unet, map_max_fanin.value_or( map_n ) );
        }
        else
        {
          unet = prepare_units( load_and_validate( map_net ), map_max_fanin, map_n );
        }
        auto const m = fitmap::pack_proposed( unet, spec );
        auto const report = fitmap::verify_mapping( m, unet, spec );
        if ( !report.ok() )
          throw fitmap::error( fitmap::error_code::validation, report.violations.front().message );
        auto const path = ( fs::path( map_out_dir ) / "proposed.map.json" ).string();
        fitmap::write_text_file( path, fitmap::serialize_mapping( m ) );
        std::cout << "proposed: " << m.crossbars.size() << " crossbars, 0 dropped synapses -> " << path << "\n";
      }
    }
    else if ( simulate_cmd->parsed() )
    {
      auto net = load_and_validate( sim_net );
      if ( sim_no_saturation )
        net = fitmap::without_saturation( net );
      fitmap::rate_batch batch;
      if ( !sim_inputs.empty() )
        batch = fitmap::load_batch( sim_inputs );
      else
        batch = fitmap::random_batch( net, sim_batch_size, sim_seed );

      nlohmann::ordered_json doc;
      doc["version"] = 1;
      doc["results"] = nlohmann::ordered_json::array();
      bool all_converged = true;
      for ( auto const& [name, inputs] : batch.samples )
      {
        auto const result = fitmap::simulate( net, inputs );
        all_converged &= result.converged;
        nlohmann::ordered_json jr;
        jr["name"] = name;
        jr["converged"] = result.converged;
        jr["iterations"] = result.iterations;
        jr["residual"] = result.residual;
        jr["rates"] = nlohmann::ordered_json::object();
        for ( auto const& [id, rate] : result.rates )
        {
          jr["rates"][std::to_string( id )] = rate;
        }
        doc["results"].push_back( jr );
        std::cout << name << ": " << ( result.converged ? "converged" : "NOT CONVERGED" ) << " after " << result.iterations << " iterations\n";
      }
      if ( !sim_out.empty() )
      {
        fitmap::write_text_file( sim_out, doc.dump( 2 ) + "\n" );
      }
      if ( !all_converged )
      {
        throw fitmap::error( fitmap::error_code::convergence, "at least one sample did not converge" );
      }
    }
    else if ( compare_cmd->parsed() )
    {
      auto const net = load_and_validate( cmp_net );
      auto const pruned = fitmap::prune_weights( net, cmp_epsilon );
      auto const batch = resolve_batch( pruned.net, cmp_batch, cmp_batch_size, cmp_seed + 1 );
      fitmap::crossbar_spec const spec{ cmp_n, std::nullopt };
      auto const fingerprint = fitmap::network_fingerprint( pruned.net );

      auto const base_map = fitmap::map_baseline( pruned.net, spec );
      auto const plan = fitmap::normalization_factors( fitmap::collect_activation_stats( pruned.net, batch ), cmp_k );
      auto const sub = fitmap::recombine( fitmap::apply_normalization( fitmap::unroll_network( pruned.net ), plan ), cmp_max_fanin.value_or( cmp_n ) );
      auto const prop_map = fitmap::pack_proposed( sub, spec );

      auto const base_fid = fitmap::baseline_fidelity( pruned.net, fitmap::apply_drops( pruned.net, base_map.dropped ), batch, {} );
      auto const prop_fid = fitmap::proposed_fidelity( pruned.net, sub, batch, {} );
      fitmap::variant_inputs base_in{ base_map, fingerprint, base_fid.max_rel_rate_error, base_fid.argmax_match_rate, base_fid.producer_rates };
      fitmap::variant_inputs prop_in{ prop_map, fingerprint, prop_fid.max_rel_rate_error, prop_fid.argmax_match_rate, prop_fid.producer_rates };
      auto report = fitmap::compare_report( base_in, prop_in, spec, {}, cmp_window );
      report.source_name = cmp_net;
      report.source_neurons = pruned.net.neurons.size();
      report.source_synapses = pruned.net.synapses.size();
      fitmap::write_text_file( cmp_out, fitmap::serialize_report( report ) );

      std::cout << "crossbars: baseline " << report.baseline.crossbar_count << ", proposed " << report.proposed.crossbar_count << "\n"
                << "dropped:   baseline " << report.baseline.dropped_synapse_count << ", proposed " << report.proposed.dropped_synapse_count << "\n"
                << "wrote " << cmp_out << "\n";
    }
    else if ( pipeline_cmd->parsed() )
    {
      fitmap::pipeline_config cfg;
      if ( !pipe_net.empty() )
        cfg.network_path = pipe_net;
      if ( !pipe_gen.layers.empty() )
        cfg.layers = parse_layer_list( pipe_gen.layers );
      if ( pipe_gen.reservoir_size > 0 )
        cfg.reservoir = fitmap::reservoir_config{ pipe_gen.reservoir_size, pipe_gen.connection_prob, pipe_gen.drive_fanout };
      if ( !pipe_gen.weights.empty() )
        cfg.weights = fitmap::weight_sampler::parse( pipe_gen.weights );
      cfg.epsilon = pipe_epsilon;
      cfg.k = pipe_k;
      cfg.crossbar_n = pipe_n;
      cfg.max_fanin = pipe_max_fanin;
      cfg.crossbar_budget = pipe_budget;
      if ( !pipe_batch.empty() )
        cfg.batch_path = pipe_batch;
      cfg.batch_size = pipe_batch_size;
      cfg.energy = pipe_energy;
      cfg.window_s = pipe_window;
      cfg.out_dir = pipe_out_dir;
      cfg.seed = pipe_gen.seed;
      cfg.write_csv = pipe_csv;

      auto const result = fitmap::run_pipeline( cfg );
      std::cout << "crossbars: baseline " << result.report.baseline.crossbar_count << ", proposed " << result.report.proposed.crossbar_count << "\n"
                << "dropped:   baseline " << result.report.baseline.dropped_synapse_count << ", proposed " << result.report.proposed.dropped_synapse_count << "\n"
                << "report:    " << result.report_path << "\n";
    }
    return 0;
  }
  catch ( fitmap::error const& e )
  {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  }
  catch ( std::exception const& e )
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
