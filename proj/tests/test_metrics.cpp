#include <catch2/catch_amalgamated.hpp>

#include <fitmap/metrics.hpp>
#include <fitmap/network_io.hpp>
#include <fitmap/pipeline.hpp>

#include "fixtures.hpp"

using namespace fitmap;

namespace
{

network star_128()
{
  network net;
  for ( neuron_id id = 0; id < 128; ++id )
    net.neurons.push_back( { id, neuron_kind::input, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 128, neuron_kind::output, 0.0, 1.0, 1000.0 } );
  for ( neuron_id id = 0; id < 128; ++id )
    net.synapses.push_back( { id, 128, 0.01 } );
  return net;
}

mapping full_crossbar()
{
  mapping m;
  m.variant = "hand";
  m.crossbar_n = 2;
  crossbar_assignment xb;
  xb.units = { 10, 11 };
  xb.input_lines = { { line_ref::kind_t::source, 0 }, { line_ref::kind_t::source, 1 } };
  xb.outputs_used = 2;
  xb.crosspoints_used = 4;
  m.crossbars.push_back( xb );
  return m;
}

} // namespace

TEST_CASE( "one high-fanin neuron wastes almost a whole crossbar" )
{
  auto const net = star_128();
  crossbar_spec const spec{ 128, std::nullopt };
  auto const m = map_baseline( net, spec );
  REQUIRE( m.crossbars.size() == 1 );
  auto const util = utilization( m, spec );
  CHECK( util.neuron_pct == Catch::Approx( 100.0 / 128.0 ) );
  CHECK( util.synapse_pct == Catch::Approx( 100.0 * 128.0 / 16384.0 ) );
}

TEST_CASE( "a fully used crossbar scores full utilization and wastes nothing" )
{
  auto const m = full_crossbar();
  crossbar_spec const spec{ 2, std::nullopt };
  auto const util = utilization( m, spec );
  CHECK( util.neuron_pct == 100.0 );
  CHECK( util.synapse_pct == 100.0 );
  CHECK( wasted_energy( m, spec, {} ) == 0.0 );
}

TEST_CASE( "an empty crossbar wastes every cell" )
{
  mapping m;
  m.crossbar_n = 4;
  m.crossbars.emplace_back();
  energy_model const em;
  CHECK( wasted_energy( m, { 4, std::nullopt }, em ) == Catch::Approx( 4.0 * em.e_idle_neuron + 16.0 * em.e_idle_synapse ) );
}

TEST_CASE( "wasted energy falls as crosspoint usage rises" )
{
  auto m = full_crossbar();
  crossbar_spec const spec{ 2, std::nullopt };
  energy_model const em;
  auto const full = wasted_energy( m, spec, em );
  m.crossbars[0].crosspoints_used = 2;
  auto const half = wasted_energy( m, spec, em );
  CHECK( full < half );
}

TEST_CASE( "routing costs nothing without crossings and the exact event energy with one" )
{
  mapping none;
  none.crossbar_n = 4;
  CHECK( interconnect_energy( none, {}, 1.0, {} ) == 0.0 );

  mapping one;
  one.crossbar_n = 4;
  one.edges.push_back( { 0, 1, 42 } );
  energy_model const em;
  rate_vector const rates{ { 42, 30.0 } };
  CHECK( interconnect_energy( one, rates, 1.0, em ) == 30.0 * 1.0 * 147e-12 );
  CHECK_THROWS_AS( interconnect_energy( one, {}, 1.0, em ), error );
}

TEST_CASE( "the shared-input fixture favors decomposition on every axis" )
{
  auto const net = test::shared_input_network();
  crossbar_spec const spec{ 4, std::nullopt };
  energy_model const em;

  auto const batch = random_batch( net, 4, 5 ).vectors();
  auto const base_map = map_baseline( net, spec );
  auto const plan = normalization_factors( collect_activation_stats( net, batch ), 1.0 );
  auto const sub = recombine( apply_normalization( unroll_network( net ), plan ), 4 );
  auto const prop_map = pack_proposed( sub, spec );

  auto const base_util = utilization( base_map, spec );
  auto const prop_util = utilization( prop_map, spec );
  CHECK( prop_util.neuron_pct > base_util.neuron_pct );
  CHECK( prop_util.synapse_pct > base_util.synapse_pct );

  auto const base_wasted = wasted_energy( base_map, spec, em );
  auto const prop_wasted = wasted_energy( prop_map, spec, em );
  CHECK( prop_wasted < base_wasted );

  // decomposition pays a routing cost for its chain links; over a short
  // observation window the wasted-energy savings still dominate
  auto const base_fid = baseline_fidelity( net, apply_drops( net, base_map.dropped ), batch, {} );
  auto const prop_fid = proposed_fidelity( net, sub, batch, {} );
  double const window = 0.1;
  auto const base_route = interconnect_energy( base_map, base_fid.producer_rates, window, em );
  auto const prop_route = interconnect_energy( prop_map, prop_fid.producer_rates, window, em );
  CHECK( base_route == 0.0 );
  CHECK( prop_route > 0.0 );
  CHECK( prop_wasted + prop_route < base_wasted + base_route );
}

TEST_CASE( "comparing a mapping with itself yields unit ratios" )
{
  auto const net = test::shared_input_network();
  crossbar_spec const spec{ 4, std::nullopt };
  auto const m = map_baseline( net, spec );
  variant_inputs side{ m, 1234, 0.0, 1.0, {} };
  auto const report = compare_report( side, side, spec, {}, 1.0 );
  for ( auto const& [key, value] : report.ratios )
  {
    CAPTURE( key );
    CHECK( value == 1.0 );
  }
}

TEST_CASE( "the fixture report shows two-thirds the crossbars and no drops" )
{
  auto const net = test::shared_input_network();
  crossbar_spec const spec{ 4, std::nullopt };
  auto const fingerprint = network_fingerprint( net );

  auto const base_map = map_baseline( net, spec );
  auto const sub = recombine( unroll_network( net ), 4 );
  auto const prop_map = pack_proposed( sub, spec );

  rate_vector chain_rates;
  for ( auto const& e : prop_map.edges )
    chain_rates[e.source_unit] = 10.0;
  variant_inputs base_in{ base_map, fingerprint, 0.05, 1.0, {} };
  variant_inputs prop_in{ prop_map, fingerprint, 0.0, 1.0, chain_rates };
  auto const report = compare_report( base_in, prop_in, spec, {}, 1.0 );
  CHECK( report.baseline.crossbar_count == 3 );
  CHECK( report.proposed.crossbar_count == 2 );
  CHECK( report.ratios.at( "crossbar_count" ) == Catch::Approx( 2.0 / 3.0 ) );
  CHECK( report.baseline.dropped_synapse_count == 1 );
  CHECK( report.proposed.dropped_synapse_count == 0 );

  auto const doc = report_to_json( report );
  CHECK( doc["baseline"]["crossbar_count"] == 3 );
  CHECK( doc["proposed"]["dropped_synapse_count"] == 0 );
}

TEST_CASE( "truncation degrades the predicted class where decomposition does not" )
{
  // sparse heavy-tailed weights stand in for a pruned trained model; the
  // baseline truncates enough mass to flip the winning output on some
  // samples while the decomposed network tracks the original exactly
  auto net = generate_feedforward( { 784, 100, 10 }, weight_sampler::uniform( 0.0, 1.0 ), 1 );
  for ( auto& s : net.synapses )
    s.weight = 0.05 * std::pow( s.weight, 4.0 );
  auto const pruned = prune_weights( net, 0.0025 ).net;

  auto const batch = random_batch( pruned, 8, 78 ).vectors();
  crossbar_spec const spec{ 128, std::nullopt };
  auto const base_map = map_baseline( pruned, spec );
  REQUIRE_FALSE( base_map.dropped.empty() );
  auto const plan = normalization_factors( collect_activation_stats( pruned, batch ), 4.0 );
  auto const sub = recombine( apply_normalization( unroll_network( pruned ), plan ), 64 );

  auto const base_fid = baseline_fidelity( pruned, apply_drops( pruned, base_map.dropped ), batch, {} );
  auto const prop_fid = proposed_fidelity( pruned, sub, batch, {} );
  CHECK( base_fid.argmax_match_rate < 1.0 );
  CHECK( prop_fid.argmax_match_rate == 1.0 );
  CHECK( prop_fid.max_rel_rate_error <= 1e-6 );
  CHECK( base_fid.max_rel_rate_error > 0.0 );
}

TEST_CASE( "mismatched sources cannot be compared" )
{
  variant_inputs a{ {}, 1, 0.0, 1.0, {} };
  variant_inputs b{ {}, 2, 0.0, 1.0, {} };
  CHECK_THROWS_AS( compare_report( a, b, { 4, std::nullopt }, {}, 1.0 ), error );
}

TEST_CASE( "per-crossbar rows cover both variants" )
{
  auto const net = test::shared_input_network();
  crossbar_spec const spec{ 4, std::nullopt };
  auto const base_map = map_baseline( net, spec );
  auto const prop_map = pack_proposed( recombine( unroll_network( net ), 4 ), spec );
  auto const csv = report_csv( base_map, prop_map );
  CHECK( std::count( csv.begin(), csv.end(), '\n' ) == 1 + 3 + 2 );
  CHECK( csv.find( "baseline,0," ) != std::string::npos );
  CHECK( csv.find( "proposed,1," ) != std::string::npos );
}
