#include <catch2/catch_amalgamated.hpp>

#include <fitmap/decompose.hpp>
#include <fitmap/network.hpp>
#include <fitmap/network_io.hpp>
#include <fitmap/normalize.hpp>
#include <fitmap/rate_sim.hpp>

#include "fixtures.hpp"

#include <algorithm>
#include <map>
#include <vector>

using namespace fitmap;

namespace
{

network single_synapse_net( double weight )
{
  network net;
  net.neurons.push_back( { 0, neuron_kind::input, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 1, neuron_kind::output, 0.0, 1.0, 1000.0 } );
  net.synapses.push_back( { 0, 1, weight } );
  return net;
}

/* layer-by-layer evaluation written independently of the simulator */
std::map<neuron_id, double> brute_force_rates( network const& net, rate_vector const& inputs,
                                               std::vector<std::vector<neuron_id>> const& layers )
{
  std::map<neuron_id, double> rates;
  for ( auto const& [id, r] : inputs )
    rates[id] = r;
  for ( std::size_t l = 1; l < layers.size(); ++l )
  {
    for ( auto const id : layers[l] )
    {
      double current = 0.0;
      for ( auto const& s : net.synapses )
      {
        if ( s.dst == id )
          current += rates.at( s.src ) * s.weight;
      }
      auto const* n = net.find_neuron( id );
      rates[id] = std::min( n->max_rate, n->gain * std::max( 0.0, current - n->threshold ) );
    }
  }
  return rates;
}

} // namespace

TEST_CASE( "an all-zero batch yields zero maxima" )
{
  auto const net = test::shared_input_network();
  rate_vector zeros;
  for ( neuron_id id = 1; id <= 6; ++id )
    zeros[id] = 0.0;
  auto const stats = collect_activation_stats( net, { zeros } );
  for ( auto const& [id, record] : stats.by_neuron )
  {
    CHECK( record.pair_max == 0.0 );
    for ( auto const m : record.index_max )
      CHECK( m == 0.0 );
  }
}

TEST_CASE( "a single synapse records the product of rate and weight" )
{
  auto const net = single_synapse_net( 2.0 );
  auto const stats = collect_activation_stats( net, { { { 0, 10.0 } } } );
  REQUIRE( stats.by_neuron.at( 1 ).index_max.size() == 1 );
  CHECK( stats.by_neuron.at( 1 ).index_max[0] == 20.0 );
  CHECK( stats.by_neuron.at( 1 ).pair_max == 20.0 );
}

TEST_CASE( "activation maxima agree with an independent re-simulation" )
{
  auto const net = test::small_feedforward( { 10, 5, 2 }, 41 );
  std::vector<std::vector<neuron_id>> layers( 3 );
  for ( neuron_id id = 0; id < 10; ++id )
    layers[0].push_back( id );
  for ( neuron_id id = 10; id < 15; ++id )
    layers[1].push_back( id );
  for ( neuron_id id = 15; id < 17; ++id )
    layers[2].push_back( id );

  std::vector<rate_vector> batch;
  random_stream rng( 4242 );
  for ( int b = 0; b < 5; ++b )
  {
    rate_vector sample;
    for ( auto const id : layers[0] )
      sample[id] = rng.uniform( 0.0, 100.0 );
    batch.push_back( sample );
  }

  auto const stats = collect_activation_stats( net, batch );

  for ( auto const& [id, record] : stats.by_neuron )
  {
    auto const inputs = ordered_fanin( net, id );
    std::vector<double> expected_max( inputs.size(), 0.0 );
    double expected_pair = 0.0;
    for ( auto const& sample : batch )
    {
      auto const rates = brute_force_rates( net, sample, layers );
      double pair = 0.0;
      for ( std::size_t i = 0; i < inputs.size(); ++i )
      {
        double const activation = rates.at( inputs[i].source ) * inputs[i].weight;
        expected_max[i] = std::max( expected_max[i], std::fabs( activation ) );
        if ( i < 2 )
          pair += activation;
      }
      expected_pair = std::max( expected_pair, std::fabs( pair ) );
    }
    for ( std::size_t i = 0; i < inputs.size(); ++i )
    {
      CHECK( record.index_max[i] == Catch::Approx( expected_max[i] ).epsilon( 1e-12 ) );
    }
    CHECK( record.pair_max == Catch::Approx( expected_pair ).epsilon( 1e-12 ) );
  }
}

TEST_CASE( "stage factors follow the pair and per-index maxima" )
{
  activation_stats stats;
  stats.batch_size = 1;
  auto& record = stats.by_neuron[9];
  record.index_max = { 1.5, 0.7, 4.0 }; // fanin 3: stages 1 and 2
  record.pair_max = 2.0;

  auto const plan_k1 = normalization_factors( stats, 1.0 );
  REQUIRE( plan_k1.stage_factors.at( 9 ).size() == 2 );
  CHECK( plan_k1.stage_factors.at( 9 )[0] == 2.0 ); // 1.0 * max|a1 + a2|
  CHECK( plan_k1.stage_factors.at( 9 )[1] == 4.0 ); // 1.0 * max|a3|

  auto const plan_half = normalization_factors( stats, 0.5 );
  CHECK( plan_half.stage_factors.at( 9 )[1] == 2.0 ); // 0.5 * max|a3|
  CHECK( plan_half.warnings.empty() );
}

TEST_CASE( "dead activations fall back to unit factors with warnings" )
{
  activation_stats stats;
  stats.batch_size = 1;
  auto& record = stats.by_neuron[3];
  record.index_max = { 0.0, 0.0, 0.0, 0.0 };
  record.pair_max = 0.0;

  auto const plan = normalization_factors( stats, 1.0 );
  auto const& factors = plan.stage_factors.at( 3 );
  REQUIRE( factors.size() == 3 );
  for ( auto const f : factors )
    CHECK( f == 1.0 );
  CHECK( plan.warnings.size() == 3 );
}

TEST_CASE( "k must be positive" )
{
  activation_stats stats;
  CHECK_THROWS_AS( normalization_factors( stats, 0.0 ), error );
}

TEST_CASE( "applying the plan rescales stage-one externals" )
{
  // fanin-2 neuron with w1 = 0.5; S1 = 2.0 divides both externals
  network net;
  net.neurons.push_back( { 0, neuron_kind::input, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 1, neuron_kind::input, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 2, neuron_kind::output, 0.0, 1.0, 1000.0 } );
  net.synapses.push_back( { 0, 2, 0.5 } );
  net.synapses.push_back( { 1, 2, 0.8 } );

  normalization_plan plan;
  plan.stage_factors[2] = { 2.0 };
  auto const normalized = apply_normalization( unroll_network( net ), plan );
  auto const flat = flatten_to_network( normalized );
  for ( auto const& s : flat.synapses )
  {
    if ( s.src == 0 )
      CHECK( s.weight == 0.25 );
    if ( s.src == 1 )
      CHECK( s.weight == 0.4 );
  }
}

TEST_CASE( "the chain edge into a stage carries the inverse of its factor" )
{
  // fanin-3 chain, S1 = 1, S2 = 4: chain edge weight 1/4
  network net;
  for ( neuron_id id = 0; id < 3; ++id )
    net.neurons.push_back( { id, neuron_kind::input, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 3, neuron_kind::output, 0.0, 1.0, 1000.0 } );
  net.synapses.push_back( { 0, 3, 1.0 } );
  net.synapses.push_back( { 1, 3, 1.0 } );
  net.synapses.push_back( { 2, 3, 0.5 } );

  normalization_plan plan;
  plan.stage_factors[3] = { 1.0, 4.0 };
  auto const normalized = apply_normalization( unroll_network( net ), plan );
  REQUIRE( normalized.units.size() == 2 );
  CHECK( realized_chain_weight( normalized, normalized.units[1] ) == 0.25 );
  // the stage-two external is divided by the same factor
  CHECK( realized_external_weight( normalized, normalized.units[1], normalized.units[1].externals[0] ) == 0.125 );
}

TEST_CASE( "a missing factor is reported with the unit" )
{
  auto const net = test::shared_input_network();
  auto const unet = unroll_network( net );
  normalization_plan plan;
  plan.stage_factors[8] = { 1.0, 1.0 }; // chain needs 4 stages
  CHECK_THROWS_WITH( apply_normalization( unet, plan ), Catch::Matchers::ContainsSubstring( "stage 3" ) );
}

TEST_CASE( "factors are invariant under batch reordering" )
{
  auto const net = test::small_feedforward( { 8, 6, 3 }, 17 );
  auto batch = random_batch( net, 6, 99 ).vectors();
  auto const forward = normalization_factors( collect_activation_stats( net, batch ), 1.0 );
  std::reverse( batch.begin(), batch.end() );
  auto const backward = normalization_factors( collect_activation_stats( net, batch ), 1.0 );
  CHECK( forward.stage_factors == backward.stage_factors );
}

TEST_CASE( "de-normalized rates match the original network exactly in the linear region" )
{
  for ( std::uint64_t seed = 1; seed <= 8; ++seed )
  {
    CAPTURE( seed );
    auto const net = test::small_feedforward( { 12, 8, 5 }, seed );
    auto const batch = random_batch( net, 5, seed + 50 ).vectors();
    auto const plan = normalization_factors( collect_activation_stats( net, batch ), 1.0 );
    auto const normalized = apply_normalization( unroll_network( net ), plan );

    auto const original_off = without_saturation( net );
    auto const unit_off = without_saturation( flatten_to_network( normalized ) );
    std::vector<neuron_id> outputs;
    for ( auto const& n : net.neurons )
    {
      if ( n.kind == neuron_kind::output )
        outputs.push_back( n.id );
    }
    for ( auto const& sample : batch )
    {
      auto const ref = simulate( original_off, sample );
      auto const got = simulate( unit_off, sample );
      auto const projected = project_origin_rates( normalized, got.rates, true );
      CHECK( rate_error( ref.rates, projected, outputs ).max_rel_error <= 1e-6 );
    }
  }
}

TEST_CASE( "chain heads stay within the 1/k rate budget on the calibration batch" )
{
  // the first stage of every chain divides by k * max|a1 + a2|, so its
  // input current over the calibration batch cannot exceed 1/k
  double const k = 2.0;
  auto const net = test::small_feedforward( { 10, 5 }, 29 );
  auto const batch = random_batch( net, 6, 31 ).vectors();
  auto const plan = normalization_factors( collect_activation_stats( net, batch ), k );
  auto const normalized = apply_normalization( unroll_network( net ), plan );
  auto const unit_net = flatten_to_network( normalized );

  for ( auto const& sample : batch )
  {
    auto const rates = simulate( unit_net, sample ).rates;
    for ( auto const& u : normalized.units )
    {
      if ( u.chain_in || u.externals.size() < 2 )
        continue;
      double current = 0.0;
      for ( auto const& input : u.externals )
      {
        current += rates.at( input.source ) * realized_external_weight( normalized, u, input );
      }
      CHECK( std::fabs( current ) <= 1.0 / k + 1e-12 );
    }
  }
}

TEST_CASE( "argmax is preserved on the calibration batch with saturation enabled" )
{
  auto const net = test::small_feedforward( { 10, 5, 4 }, 23 );
  auto const batch = random_batch( net, 8, 77 ).vectors();
  auto const plan = normalization_factors( collect_activation_stats( net, batch ), 1.0 );
  auto const normalized = apply_normalization( unroll_network( net ), plan );
  auto const unit_net = flatten_to_network( normalized );

  std::vector<neuron_id> outputs;
  for ( auto const& n : net.neurons )
  {
    if ( n.kind == neuron_kind::output )
      outputs.push_back( n.id );
  }
  for ( auto const& sample : batch )
  {
    auto const ref = simulate( net, sample );
    auto const got = simulate( unit_net, sample );
    auto const projected = project_origin_rates( normalized, got.rates, true );
    CHECK( argmax_rate( projected, outputs ) == argmax_rate( ref.rates, outputs ) );
  }
}
