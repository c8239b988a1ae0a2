#include <catch2/catch_amalgamated.hpp>

#include <fitmap/network.hpp>
#include <fitmap/rate_sim.hpp>

#include "fixtures.hpp"

using namespace fitmap;

namespace
{

/* input X drives A, A and B excite each other */
network mutual_loop( double loop_weight )
{
  network net;
  net.neurons.push_back( { 0, neuron_kind::input, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 1, neuron_kind::hidden, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 2, neuron_kind::output, 0.0, 1.0, 1000.0 } );
  net.synapses.push_back( { 0, 1, 1.0 } );
  net.synapses.push_back( { 1, 2, loop_weight } );
  net.synapses.push_back( { 2, 1, loop_weight } );
  return net;
}

} // namespace

TEST_CASE( "transfer function boundary, clamp, and interior point" )
{
  neuron n{ 0, neuron_kind::hidden, 0.0, 1.0, 1000.0 };
  CHECK( neuron_transfer( 0.0, n ) == 0.0 );
  CHECK( neuron_transfer( 10.0 * n.max_rate / n.gain + n.threshold, n ) == n.max_rate );

  neuron p{ 0, neuron_kind::hidden, 1.0, 2.0, 1000.0 };
  CHECK( neuron_transfer( 3.0, p ) == 4.0 );
}

TEST_CASE( "transfer function is monotone and clamped for random parameters" )
{
  random_stream rng( 2024 );
  for ( int trial = 0; trial < 200; ++trial )
  {
    neuron n{ 0, neuron_kind::hidden, rng.uniform( 0.0, 5.0 ), rng.uniform( 0.1, 4.0 ), rng.uniform( 1.0, 2000.0 ) };
    double const a = rng.uniform( -100.0, 100.0 );
    double const b = rng.uniform( -100.0, 100.0 );
    double const ra = neuron_transfer( a, n );
    double const rb = neuron_transfer( b, n );
    if ( a <= b )
      CHECK( ra <= rb );
    else
      CHECK( rb <= ra );
    CHECK( ra >= 0.0 );
    CHECK( ra <= n.max_rate );
  }
}

TEST_CASE( "identity chain in the linear region" )
{
  network net;
  net.neurons.push_back( { 0, neuron_kind::input, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 1, neuron_kind::output, 0.0, 1.0, 1000.0 } );
  net.synapses.push_back( { 0, 1, 1.0 } );
  auto const result = simulate( net, { { 0, 10.0 } } );
  CHECK( result.converged );
  CHECK( result.rates.at( 1 ) == 10.0 );
}

TEST_CASE( "mutual loop settles at the analytic fixed point" )
{
  // a = 10 + 0.5 b, b = 0.5 a  =>  a = 40/3, b = 20/3
  auto const net = mutual_loop( 0.5 );
  auto const result = simulate( net, { { 0, 10.0 } } );
  REQUIRE( result.converged );
  CHECK( std::fabs( result.rates.at( 1 ) - 40.0 / 3.0 ) / ( 40.0 / 3.0 ) <= 1e-8 );
  CHECK( std::fabs( result.rates.at( 2 ) - 20.0 / 3.0 ) / ( 20.0 / 3.0 ) <= 1e-8 );
}

TEST_CASE( "input coverage is enforced" )
{
  auto const net = mutual_loop( 0.5 );
  CHECK_THROWS_AS( simulate( net, {} ), error );
  CHECK_THROWS_AS( simulate( net, { { 0, 10.0 }, { 1, 5.0 } } ), error );
  CHECK_THROWS_AS( simulate( net, { { 1, 10.0 } } ), error );
}

TEST_CASE( "feedforward evaluation ignores declaration order" )
{
  auto net = test::small_feedforward( { 6, 5, 3 }, 77 );
  rate_vector inputs;
  for ( auto const& n : net.neurons )
  {
    if ( n.kind == neuron_kind::input )
      inputs[n.id] = 10.0 + static_cast<double>( n.id );
  }
  auto const straight = simulate( net, inputs );

  std::reverse( net.neurons.begin(), net.neurons.end() );
  std::reverse( net.synapses.begin(), net.synapses.end() );
  auto const shuffled = simulate( net, inputs );
  // bit-identical, not merely close
  CHECK( straight.rates == shuffled.rates );
}

TEST_CASE( "simulation is deterministic" )
{
  auto const net = test::driven_reservoir( 20, 0.3, 5 );
  rate_vector inputs{ { 20, 25.0 } };
  auto const a = simulate( net, inputs );
  auto const b = simulate( net, inputs );
  REQUIRE( a.converged );
  CHECK( a.rates == b.rates );
  CHECK( a.iterations == b.iterations );
}

TEST_CASE( "non-convergence is reported, not thrown" )
{
  // undamped two-cycle: the hidden rate flips between 0 and 10 forever
  network net;
  net.neurons.push_back( { 0, neuron_kind::input, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 1, neuron_kind::hidden, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 2, neuron_kind::output, 0.0, 1.0, 1000.0 } );
  net.synapses.push_back( { 0, 1, 1.0 } );
  net.synapses.push_back( { 2, 1, -1.0 } );
  net.synapses.push_back( { 1, 2, 1.0 } );
  sim_config cfg;
  cfg.damping = 1.0;
  cfg.max_iterations = 50;
  auto const result = simulate( net, { { 0, 10.0 } }, cfg );
  CHECK_FALSE( result.converged );
  CHECK( result.iterations == 50 );
  CHECK( result.residual > 0.0 );
}

TEST_CASE( "rate error on identical and shifted vectors" )
{
  rate_vector const ref{ { 1, 10.0 } };
  auto const zero = rate_error( ref, ref, { 1 } );
  CHECK( zero.max_rel_error == 0.0 );
  CHECK( zero.rmse == 0.0 );

  rate_vector const test_v{ { 1, 11.0 } };
  auto const shifted = rate_error( ref, test_v, { 1 } );
  CHECK( shifted.max_rel_error == Catch::Approx( 0.1 ) );
  CHECK( shifted.rmse == Catch::Approx( 1.0 ) );
}

TEST_CASE( "argmax breaks ties toward the lowest id" )
{
  rate_vector const rates{ { 3, 5.0 }, { 4, 5.0 }, { 5, 1.0 } };
  CHECK( argmax_rate( rates, { 3, 4, 5 } ) == 0 );
  CHECK( argmax_rate( rates, { 5, 4, 3 } ) == 1 );
}
