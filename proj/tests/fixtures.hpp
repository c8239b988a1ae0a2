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
  \file fixtures.hpp
  \brief Shared test fixtures
*/

#pragma once

#include <cstdint>
#include <vector>

#include <fitmap/network.hpp>

namespace fitmap::test
{

/*! \brief Three neurons over six shared inputs on 4 x 4 crossbars.
 *
 * y1 (id 7) reads x1, x2; y2 (id 8) reads x2..x6 with its smallest weight
 * on x6; y3 (id 9) reads x1, x3, x4, x6.  Baseline clustering needs three
 * crossbars and truncates the x6 component of y2; decomposition packs the
 * same computation onto two crossbars with nothing dropped.
 */
inline network shared_input_network()
{
  network net;
  for ( neuron_id id = 1; id <= 6; ++id )
  {
    net.neurons.push_back( { id, neuron_kind::input, 0.0, 1.0, 1000.0 } );
  }
  net.neurons.push_back( { 7, neuron_kind::output, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 8, neuron_kind::output, 0.0, 1.0, 1000.0 } );
  net.neurons.push_back( { 9, neuron_kind::output, 0.0, 1.0, 1000.0 } );

  net.synapses.push_back( { 1, 7, 0.5 } );
  net.synapses.push_back( { 2, 7, 0.4 } );

  net.synapses.push_back( { 2, 8, 0.9 } );
  net.synapses.push_back( { 3, 8, 0.8 } );
  net.synapses.push_back( { 4, 8, 0.7 } );
  net.synapses.push_back( { 5, 8, 0.6 } );
  net.synapses.push_back( { 6, 8, 0.1 } );

  net.synapses.push_back( { 1, 9, 0.85 } );
  net.synapses.push_back( { 3, 9, 0.75 } );
  net.synapses.push_back( { 4, 9, 0.65 } );
  net.synapses.push_back( { 6, 9, 0.55 } );

  net.metadata["topology"] = "shared-input-demo";
  return net;
}

/*! \brief Feedforward net whose currents stay below saturation for inputs in [0, 100]. */
inline network small_feedforward( std::vector<std::size_t> const& layers, std::uint64_t seed )
{
  std::size_t max_fanin = 1;
  for ( std::size_t l = 0; l + 1 < layers.size(); ++l )
  {
    max_fanin = std::max( max_fanin, layers[l] );
  }
  double const hi = 1.6 / static_cast<double>( max_fanin );
  return generate_feedforward( layers, weight_sampler::uniform( hi / 10.0, hi ), seed );
}

/*! \brief Contractive reservoir with every core neuron driven by the rate source.
 *
 * Recurrent in-weights are rescaled so each row sums below 0.8, which
 * guarantees a unique fixed point even with the saturation clamp removed.
 */
inline network driven_reservoir( std::size_t size, double connection_prob, std::uint64_t seed )
{
  auto net = generate_reservoir( size, connection_prob, seed );
  std::map<neuron_id, double> row_sum;
  for ( auto const& s : net.synapses )
    row_sum[s.dst] += std::fabs( s.weight );
  for ( auto& s : net.synapses )
  {
    if ( row_sum.at( s.dst ) > 0.8 )
      s.weight *= 0.8 / row_sum.at( s.dst );
  }
  attach_input_drive( net, size, weight_sampler::uniform( 0.5, 1.0 ), seed + 1 );
  return net;
}

/*! \brief Mixed corpus of small seeded networks for property suites. */
inline network seeded_instance( std::uint64_t seed )
{
  random_stream rng( seed * 7919u + 13u );
  if ( rng.uniform01() < 0.6 )
  {
    std::size_t const layer_count = 2 + static_cast<std::size_t>( rng.below( 3 ) );
    std::vector<std::size_t> layers;
    for ( std::size_t l = 0; l < layer_count; ++l )
    {
      layers.push_back( 1 + static_cast<std::size_t>( rng.below( 12 ) ) );
    }
    return small_feedforward( layers, seed );
  }
  std::size_t const size = 4 + static_cast<std::size_t>( rng.below( 24 ) );
  double const p = 0.15 + 0.5 * rng.uniform01();
  return driven_reservoir( size, p, seed );
}

} // namespace fitmap::test
