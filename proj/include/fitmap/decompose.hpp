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
  \file decompose.hpp
  \brief Spatial decomposition of high-fanin neurons into fanin-of-two
         unit chains, and recombination into bounded-fanin subunits

  A neuron with m >= 2 inputs becomes a chain of m - 1 units: the first
  combines the two lowest-id inputs, each later stage combines the chain
  value with the next input, and only the last stage carries the origin
  neuron's threshold and gain.  Chains are regrouped for packing so each
  subunit keeps at most max_fanin - 1 external inputs plus the chain link.

  External inputs enter the chain in ascending source-id order.  With a
  shared order, the stage-k subunits of different neurons reference the
  same input lines and can share crossbar rows; a per-neuron order (for
  example by weight magnitude) would make stage line sets disjoint and
  waste most of the packing benefit.

  Every unit stores its inputs at original weight scale together with one
  scale divisor.  Realized synapse weights are derived as
  weight * scale(producer) / scale(consumer), so an unnormalized network
  (all scales 1) realizes the original weights and chain links of 1, and
  normalization only has to assign scales.
*/

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "network.hpp"

namespace fitmap
{

using unit_id = std::uint32_t;

/*! \brief One external input at original weight scale. */
struct unit_input
{
  neuron_id source{ 0 };
  double weight{ 0.0 };
};

/*! \brief A fanin-bounded computation node of a decomposed neuron. */
struct unit
{
  unit_id id{ 0 };
  neuron_id origin{ 0 };            //!< neuron this unit helps compute
  std::uint32_t first_stage{ 1 };   //!< first covered chain stage (1-based)
  std::uint32_t last_stage{ 1 };    //!< last covered chain stage
  std::vector<unit_input> externals;
  std::optional<unit_id> chain_in;  //!< previous unit in the chain, if any
  double scale{ 1.0 };              //!< weight-normalization divisor
  bool is_final{ true };            //!< emits the origin neuron's output

  std::size_t fanin() const { return externals.size() + ( chain_in ? 1u : 0u ); }
};

/*! \brief A network of decomposed units plus the original rate sources. */
struct unit_network
{
  std::vector<unit> units;                       //!< ascending unit id
  std::map<neuron_id, neuron> original_neurons;  //!< all neurons of the source network
  std::map<neuron_id, unit_id> final_unit;       //!< origin -> unit emitting its output
  std::map<std::string, std::string> metadata;
  bool recombined{ false };

  unit const* find_unit( unit_id id ) const
  {
    auto const it = std::lower_bound( units.begin(), units.end(), id, []( unit const& u, unit_id key ) { return u.id < key; } );
    return it != units.end() && it->id == id ? &*it : nullptr;
  }

  bool is_input_source( neuron_id id ) const
  {
    auto const it = original_neurons.find( id );
    return it != original_neurons.end() && it->second.kind == neuron_kind::input;
  }

  std::vector<neuron_id> input_sources() const
  {
    std::vector<neuron_id> out;
    for ( auto const& [id, n] : original_neurons )
    {
      if ( n.kind == neuron_kind::input )
        out.push_back( id );
    }
    return out;
  }
};

/*! \brief Incoming (source, weight) pairs of a neuron in chain order (ascending source id). */
inline std::vector<unit_input> ordered_fanin( network const& net, neuron_id id )
{
  std::vector<unit_input> inputs;
  for ( auto const& s : net.synapses )
  {
    if ( s.dst == id )
      inputs.push_back( { s.src, s.weight } );
  }
  std::sort( inputs.begin(), inputs.end(), []( unit_input const& a, unit_input const& b ) { return a.source < b.source; } );
  return inputs;
}

/*! \brief First id available for units (above every neuron id). */
inline unit_id unit_id_base( network const& net )
{
  neuron_id max_id = 0;
  for ( auto const& n : net.neurons )
    max_id = std::max( max_id, n.id );
  return net.neurons.empty() ? 0 : max_id + 1;
}

namespace detail
{

inline std::vector<unit> build_chain( std::vector<unit_input> const& inputs, neuron_id origin, unit_id first_id )
{
  std::vector<unit> chain;
  std::size_t const m = inputs.size();
  if ( m >= 2 )
  {
    for ( std::size_t stage = 1; stage <= m - 1; ++stage )
    {
      unit u;
      u.id = first_id + static_cast<unit_id>( stage - 1 );
      u.origin = origin;
      u.first_stage = u.last_stage = static_cast<std::uint32_t>( stage );
      if ( stage == 1 )
      {
        u.externals = { inputs[0], inputs[1] };
      }
      else
      {
        u.externals = { inputs[stage] };
        u.chain_in = u.id - 1;
      }
      u.is_final = stage == m - 1;
      chain.push_back( u );
    }
  }
  else
  {
    // fanin 0 or 1: nothing to unroll, the neuron passes through as one unit
    unit u;
    u.id = first_id;
    u.origin = origin;
    u.externals = inputs;
    u.is_final = true;
    chain.push_back( u );
  }
  return chain;
}

} // namespace detail

/*! \brief Unrolls a single neuron with fanin m >= 2 into m - 1 chained units.
 *
 * Returns an empty vector for fanin below two, signalling that the caller
 * should pass the neuron through unchanged.
 */
inline std::vector<unit> unroll_neuron( network const& net, neuron_id id )
{
  auto const inputs = ordered_fanin( net, id );
  if ( inputs.size() < 2 )
  {
    return {};
  }
  return detail::build_chain( inputs, id, unit_id_base( net ) );
}

/*! \brief Unrolls every non-input neuron of the network.
 *
 * Neurons with fanin above two become chains, everything else becomes a
 * single pass-through unit, and consumers are rerouted to the producing
 * neuron's final unit (which also reroutes cycles through chain ends).
 */
inline unit_network unroll_network( network const& net )
{
  unit_network unet;
  unet.metadata = net.metadata;
  for ( auto const& n : net.neurons )
  {
    unet.original_neurons[n.id] = n;
  }

  std::vector<neuron_id> targets;
  for ( auto const& [id, n] : unet.original_neurons )
  {
    if ( n.kind != neuron_kind::input )
      targets.push_back( id );
  }

  unit_id next_id = unit_id_base( net );
  for ( auto const id : targets )
  {
    auto chain = detail::build_chain( ordered_fanin( net, id ), id, next_id );
    next_id += static_cast<unit_id>( chain.size() );
    unet.final_unit[id] = chain.back().id;
    unet.units.insert( unet.units.end(), chain.begin(), chain.end() );
  }
  return unet;
}

/*! \brief The unit-count formula: sum of (fanin - 1) over non-input neurons.
 *
 * Reported as such even where it disagrees with the realized unit count
 * (fanin-0 and fanin-1 neurons still occupy one hardware unit each but
 * contribute -1 and 0 here).
 */
inline std::int64_t fit_unit_count( network const& net )
{
  auto const counts = fanin_counts( net );
  std::int64_t total = 0;
  for ( auto const& n : net.neurons )
  {
    if ( n.kind == neuron_kind::input )
      continue;
    total += static_cast<std::int64_t>( counts.at( n.id ) ) - 1;
  }
  return total;
}

/*! \brief Regroups each chain into subunits with fanin <= max_fanin.
 *
 * Greedy in stage order: a group absorbs the next unit while its external
 * count stays within max_fanin - 1, keeping one input slot reserved for
 * the chain link.  A unit that alone exceeds the reservation (the head of
 * a chain at max_fanin = 2) stands as its own subunit, which makes
 * max_fanin = 2 the identity.  A chain of m externals yields
 * ceil(m / (max_fanin - 1)) subunits.
 */
inline unit_network recombine( unit_network const& unet, std::size_t max_fanin )
{
  if ( max_fanin < 2 )
  {
    throw error( error_code::config, "recombine: max_fanin must be >= 2" );
  }

  unit_network out;
  out.original_neurons = unet.original_neurons;
  out.metadata = unet.metadata;
  out.recombined = true;

  // chains keyed by origin, in stage order
  std::map<neuron_id, std::vector<unit const*>> chains;
  for ( auto const& u : unet.units )
  {
    chains[u.origin].push_back( &u );
  }
  for ( auto& [origin, chain] : chains )
  {
    std::sort( chain.begin(), chain.end(), []( unit const* a, unit const* b ) { return a->first_stage < b->first_stage; } );
  }

  neuron_id max_id = 0;
  for ( auto const& [id, n] : unet.original_neurons )
    max_id = std::max( max_id, id );
  unit_id next_id = unet.original_neurons.empty() ? 0 : max_id + 1;

  for ( auto const& [origin, chain] : chains )
  {
    std::vector<std::vector<unit const*>> groups;
    for ( auto const* u : chain )
    {
      if ( !groups.empty() )
      {
        std::size_t ext = 0;
        for ( auto const* g : groups.back() )
          ext += g->externals.size();
        if ( ext + u->externals.size() <= max_fanin - 1 )
        {
          groups.back().push_back( u );
          continue;
        }
      }
      groups.push_back( { u } );
    }

    std::optional<unit_id> previous;
    for ( auto const& group : groups )
    {
      unit merged;
      merged.id = next_id++;
      merged.origin = origin;
      merged.first_stage = group.front()->first_stage;
      merged.last_stage = group.back()->last_stage;
      merged.scale = group.back()->scale;
      merged.is_final = group.back()->is_final;
      merged.chain_in = group.front()->chain_in ? previous : std::nullopt;
      for ( auto const* u : group )
      {
        merged.externals.insert( merged.externals.end(), u->externals.begin(), u->externals.end() );
      }
      previous = merged.id;
      out.final_unit[origin] = merged.id;
      out.units.push_back( merged );
    }
  }
  std::sort( out.units.begin(), out.units.end(), []( unit const& a, unit const& b ) { return a.id < b.id; } );
  return out;
}

/* realized-weight flattening */

/*! \brief Realized weight of an external edge into `u`. */
inline double realized_external_weight( unit_network const& unet, unit const& u, unit_input const& input )
{
  double producer_scale = 1.0;
  if ( !unet.is_input_source( input.source ) )
  {
    producer_scale = unet.find_unit( unet.final_unit.at( input.source ) )->scale;
  }
  return input.weight * producer_scale / u.scale;
}

/*! \brief Realized weight of the chain edge into `u`. */
inline double realized_chain_weight( unit_network const& unet, unit const& u )
{
  return unet.find_unit( *u.chain_in )->scale / u.scale;
}

/*! \brief Materializes the unit network as a plain network of units.
 *
 * Input sources keep their ids; every unit becomes a neuron.  Intermediate
 * units carry threshold 0 and gain 1 so the chain stays proportional; the
 * final unit carries the origin's gain and its threshold divided by the
 * unit scale, which keeps the comparison with the original network exact
 * in the linear region.
 */
inline network flatten_to_network( unit_network const& unet )
{
  network net;
  net.metadata = unet.metadata;
  for ( auto const& [id, n] : unet.original_neurons )
  {
    if ( n.kind == neuron_kind::input )
      net.neurons.push_back( n );
  }
  for ( auto const& u : unet.units )
  {
    auto const& origin = unet.original_neurons.at( u.origin );
    neuron n;
    n.id = u.id;
    n.kind = u.is_final && origin.kind == neuron_kind::output ? neuron_kind::output : neuron_kind::hidden;
    n.threshold = u.is_final ? origin.threshold / u.scale : 0.0;
    n.gain = u.is_final ? origin.gain : 1.0;
    n.max_rate = origin.max_rate;
    net.neurons.push_back( n );

    for ( auto const& input : u.externals )
    {
      neuron_id const src = unet.is_input_source( input.source ) ? input.source : unet.final_unit.at( input.source );
      net.synapses.push_back( { src, u.id, realized_external_weight( unet, u, input ) } );
    }
    if ( u.chain_in )
    {
      net.synapses.push_back( { *u.chain_in, u.id, realized_chain_weight( unet, u ) } );
    }
  }
  return net;
}

/*! \brief Scale divisor between an origin's final unit rate and its original rate. */
inline double denorm_factor( unit_network const& unet, neuron_id origin )
{
  return unet.find_unit( unet.final_unit.at( origin ) )->scale;
}

/*! \brief Rates of final units projected back onto origin neuron ids.
 *
 * With `denormalize` set, rates are multiplied by the per-neuron scale so
 * they are directly comparable with a simulation of the original network.
 */
inline std::map<neuron_id, double> project_origin_rates( unit_network const& unet, std::map<neuron_id, double> const& unit_rates,
                                                         bool denormalize )
{
  std::map<neuron_id, double> out;
  for ( auto const& [origin, uid] : unet.final_unit )
  {
    auto const it = unit_rates.find( uid );
    if ( it == unit_rates.end() )
    {
      throw error( error_code::config, "missing rate for unit " + std::to_string( uid ) );
    }
    out[origin] = denormalize ? it->second * unet.find_unit( uid )->scale : it->second;
  }
  return out;
}

/* annotated serialization */

/*! \brief Network view carrying enough metadata to reconstruct the unit network. */
inline network to_annotated_network( unit_network const& unet )
{
  auto net = flatten_to_network( unet );
  net.metadata["decomposed"] = "true";
  net.metadata["recombined"] = unet.recombined ? "true" : "false";
  nlohmann::ordered_json info = nlohmann::ordered_json::array();
  for ( auto const& u : unet.units )
  {
    info.push_back( { u.id, u.origin, u.first_stage, u.last_stage, u.scale, u.is_final ? 1 : 0 } );
  }
  net.metadata["unit_info"] = info.dump();
  return net;
}

/*! \brief Rebuilds a unit network from an annotated flattened network. */
inline unit_network from_annotated_network( network const& net )
{
  if ( net.metadata.count( "decomposed" ) == 0 || net.metadata.count( "unit_info" ) == 0 )
  {
    throw error( error_code::config, "network is not an annotated unit network" );
  }
  unit_network unet;
  unet.metadata = net.metadata;
  unet.metadata.erase( "decomposed" );
  unet.metadata.erase( "recombined" );
  unet.metadata.erase( "unit_info" );
  unet.recombined = net.metadata.at( "recombined" ) == "true";

  std::map<unit_id, unit> units;
  try
  {
    auto const info = nlohmann::ordered_json::parse( net.metadata.at( "unit_info" ) );
    for ( auto const& entry : info )
    {
      unit u;
      u.id = entry.at( 0 ).get<unit_id>();
      u.origin = entry.at( 1 ).get<neuron_id>();
      u.first_stage = entry.at( 2 ).get<std::uint32_t>();
      u.last_stage = entry.at( 3 ).get<std::uint32_t>();
      u.scale = entry.at( 4 ).get<double>();
      u.is_final = entry.at( 5 ).get<int>() != 0;
      units[u.id] = u;
      if ( u.is_final )
        unet.final_unit[u.origin] = u.id;
    }
  }
  catch ( nlohmann::json::exception const& e )
  {
    throw error( error_code::config, std::string( "malformed unit_info annotation: " ) + e.what() );
  }

  std::map<neuron_id, neuron const*> flat;
  for ( auto const& n : net.neurons )
  {
    flat[n.id] = &n;
    if ( units.count( n.id ) == 0 )
    {
      unet.original_neurons[n.id] = n; // a rate source
    }
  }
  // recover original neuron parameters from each final unit
  for ( auto const& [origin, uid] : unet.final_unit )
  {
    auto const& u = units.at( uid );
    auto const& n = *flat.at( uid );
    neuron original;
    original.id = origin;
    original.kind = n.kind == neuron_kind::output ? neuron_kind::output : neuron_kind::hidden;
    original.threshold = n.threshold * u.scale;
    original.gain = n.gain;
    original.max_rate = n.max_rate;
    unet.original_neurons[origin] = original;
  }
  // recover original-scale weights
  for ( auto const& s : net.synapses )
  {
    auto& u = units.at( s.dst );
    auto const producer = units.find( s.src );
    if ( producer != units.end() && producer->second.origin == u.origin && producer->second.last_stage + 1 == u.first_stage )
    {
      u.chain_in = s.src;
      continue;
    }
    neuron_id source = s.src;
    double producer_scale = 1.0;
    if ( producer != units.end() )
    {
      source = producer->second.origin;
      producer_scale = producer->second.scale;
    }
    u.externals.push_back( { source, s.weight * u.scale / producer_scale } );
  }
  for ( auto& [id, u] : units )
  {
    std::sort( u.externals.begin(), u.externals.end(), []( unit_input const& a, unit_input const& b ) { return a.source < b.source; } );
    unet.units.push_back( u );
  }
  std::sort( unet.units.begin(), unet.units.end(), []( unit const& a, unit const& b ) { return a.id < b.id; } );
  return unet;
}

} // namespace fitmap
