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
  \file network.hpp
  \brief Spiking network data model, validation, fanin statistics, and
         deterministic synthetic generators
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace fitmap
{

using neuron_id = std::uint32_t;

enum class neuron_kind
{
  input,
  hidden,
  output
};

inline std::string to_string( neuron_kind kind )
{
  switch ( kind )
  {
  case neuron_kind::input:
    return "input";
  case neuron_kind::output:
    return "output";
  default:
    return "hidden";
  }
}

inline std::optional<neuron_kind> neuron_kind_from_string( std::string const& s )
{
  if ( s == "input" )
    return neuron_kind::input;
  if ( s == "hidden" )
    return neuron_kind::hidden;
  if ( s == "output" )
    return neuron_kind::output;
  return std::nullopt;
}

/*! \brief A rate-coded spiking neuron.
 *
 * The transfer function is a rectified saturating line: a neuron fires at
 * `min(max_rate, gain * max(0, current - threshold))`.  Input neurons are
 * pure rate sources; their threshold dynamics are never evaluated.
 */
struct neuron
{
  neuron_id id{ 0 };
  neuron_kind kind{ neuron_kind::hidden };
  double threshold{ 0.0 };
  double gain{ 1.0 };
  double max_rate{ 1000.0 };
};

/*! \brief A directed synapse with a signed conductance-scaled weight. */
struct synapse
{
  neuron_id src{ 0 };
  neuron_id dst{ 0 };
  double weight{ 0.0 };
};

/*! \brief A directed weighted graph of spiking neurons.
 *
 * Cycles are allowed (recurrent reservoirs).  Structural invariants are
 * checked by `validate_network`, not enforced on mutation.
 */
struct network
{
  std::vector<neuron> neurons;
  std::vector<synapse> synapses;
  std::map<std::string, std::string> metadata;

  neuron const* find_neuron( neuron_id id ) const
  {
    for ( auto const& n : neurons )
    {
      if ( n.id == id )
        return &n;
    }
    return nullptr;
  }

  std::size_t num_inputs() const
  {
    std::size_t count = 0;
    for ( auto const& n : neurons )
    {
      if ( n.kind == neuron_kind::input )
        ++count;
    }
    return count;
  }

  /*! \brief Sorts neurons by id and synapses by (src, dst). */
  void canonicalize()
  {
    std::sort( neurons.begin(), neurons.end(), []( neuron const& a, neuron const& b ) { return a.id < b.id; } );
    std::sort( synapses.begin(), synapses.end(), []( synapse const& a, synapse const& b ) {
      return std::make_pair( a.src, a.dst ) < std::make_pair( b.src, b.dst );
    } );
  }
};

/*! \brief Number of synapses terminating at each neuron. */
inline std::map<neuron_id, std::size_t> fanin_counts( network const& net )
{
  std::map<neuron_id, std::size_t> counts;
  for ( auto const& n : net.neurons )
  {
    counts[n.id] = 0;
  }
  for ( auto const& s : net.synapses )
  {
    auto it = counts.find( s.dst );
    if ( it != counts.end() )
      ++it->second;
  }
  return counts;
}

/* validation */

struct violation
{
  std::string code;
  std::string message;
};

struct validation_report
{
  std::vector<violation> violations;

  bool ok() const { return violations.empty(); }

  std::string summary() const
  {
    std::ostringstream os;
    for ( auto const& v : violations )
    {
      os << "[" << v.code << "] " << v.message << "\n";
    }
    return os.str();
  }
};

/*! \brief Checks every structural invariant and returns all violations.
 *
 * Violations are data, not exceptions: duplicate neuron ids, dangling
 * synapse endpoints, parallel synapses, bad neuron parameters, input
 * neurons with nonzero fanin, and missing input or output neurons.
 */
inline validation_report validate_network( network const& net )
{
  validation_report report;
  auto add = [&]( std::string code, std::string message ) {
    report.violations.push_back( { std::move( code ), std::move( message ) } );
  };

  std::map<neuron_id, neuron const*> by_id;
  for ( auto const& n : net.neurons )
  {
    if ( !by_id.emplace( n.id, &n ).second )
    {
      add( "duplicate neuron", "neuron id " + std::to_string( n.id ) + " appears more than once" );
    }
    if ( !( n.max_rate > 0.0 ) )
      add( "bad parameter", "neuron " + std::to_string( n.id ) + " has max_rate <= 0" );
    if ( !( n.gain > 0.0 ) )
      add( "bad parameter", "neuron " + std::to_string( n.id ) + " has gain <= 0" );
    if ( n.threshold < 0.0 )
      add( "bad parameter", "neuron " + std::to_string( n.id ) + " has negative threshold" );
  }

  std::set<std::pair<neuron_id, neuron_id>> seen_edges;
  std::map<neuron_id, std::size_t> fanin;
  for ( auto const& s : net.synapses )
  {
    bool endpoints_ok = true;
    if ( by_id.count( s.src ) == 0 )
    {
      add( "dangling endpoint", "synapse (" + std::to_string( s.src ) + " -> " + std::to_string( s.dst ) + ") references missing source" );
      endpoints_ok = false;
    }
    if ( by_id.count( s.dst ) == 0 )
    {
      add( "dangling endpoint", "synapse (" + std::to_string( s.src ) + " -> " + std::to_string( s.dst ) + ") references missing destination" );
      endpoints_ok = false;
    }
    if ( !seen_edges.insert( { s.src, s.dst } ).second )
    {
      add( "parallel synapse", "synapse pair (" + std::to_string( s.src ) + ", " + std::to_string( s.dst ) + ") is duplicated; parallel synapses must be pre-summed" );
    }
    if ( endpoints_ok )
      ++fanin[s.dst];
  }

  bool has_input = false, has_output = false;
  for ( auto const& n : net.neurons )
  {
    if ( n.kind == neuron_kind::input )
    {
      has_input = true;
      auto it = fanin.find( n.id );
      if ( it != fanin.end() && it->second > 0 )
      {
        add( "input with fanin", "input neuron " + std::to_string( n.id ) + " has " + std::to_string( it->second ) + " incoming synapses" );
      }
    }
    if ( n.kind == neuron_kind::output )
      has_output = true;
  }
  if ( !has_input )
    add( "no input", "network has no input neuron" );
  if ( !has_output )
    add( "no output", "network has no output neuron" );
  return report;
}


/* fanin statistics */

struct fanin_statistics
{
  /*! \brief fanin value -> number of non-input neurons with that fanin */
  std::map<std::size_t, std::size_t> histogram;
  /*! \brief fraction of non-input neurons whose fanin exceeds the limit */
  double fraction_exceeding{ 0.0 };
};

/*! \brief Fanin histogram over non-input neurons and the fraction above `limit`. */
inline fanin_statistics fanin_stats( network const& net, std::size_t limit )
{
  if ( limit < 1 )
  {
    throw error( error_code::config, "fanin_stats: limit must be >= 1" );
  }
  auto const counts = fanin_counts( net );
  fanin_statistics stats;
  std::size_t non_inputs = 0, exceeding = 0;
  for ( auto const& n : net.neurons )
  {
    if ( n.kind == neuron_kind::input )
      continue;
    ++non_inputs;
    auto const f = counts.at( n.id );
    ++stats.histogram[f];
    if ( f > limit )
      ++exceeding;
  }
  stats.fraction_exceeding = non_inputs == 0 ? 0.0 : static_cast<double>( exceeding ) / static_cast<double>( non_inputs );
  return stats;
}


/* generators */

/*! \brief Deterministic random stream.
 *
 * mt19937_64 is fully specified by the standard; the floating-point draws
 * below avoid `std::uniform_real_distribution`, whose output is
 * implementation-defined, so generated networks are identical across
 * platforms for a fixed seed.
 */
class random_stream
{
public:
  explicit random_stream( std::uint64_t seed ) : _engine( seed ) {}

  double uniform01()
  {
    return static_cast<double>( _engine() >> 11 ) * 0x1.0p-53;
  }

  double uniform( double lo, double hi )
  {
    return lo + ( hi - lo ) * uniform01();
  }

  /* Box-Muller; consumes exactly two draws per call. */
  double normal( double mean, double stddev )
  {
    double u1 = uniform01();
    double u2 = uniform01();
    if ( u1 < 1e-300 )
      u1 = 1e-300;
    double const r = std::sqrt( -2.0 * std::log( u1 ) );
    return mean + stddev * r * std::cos( 6.283185307179586 * u2 );
  }

  std::uint64_t next_u64() { return _engine(); }

  /* Unbiased integer in [0, bound). */
  std::uint64_t below( std::uint64_t bound )
  {
    std::uint64_t const threshold = bound == 0 ? 0 : ( std::numeric_limits<std::uint64_t>::max() - bound + 1 ) % bound;
    while ( true )
    {
      std::uint64_t const x = _engine();
      if ( x >= threshold )
        return x % bound;
    }
  }

private:
  std::mt19937_64 _engine;
};

/*! \brief Weight distribution used by the generators. */
struct weight_sampler
{
  enum class kind_t
  {
    uniform,
    normal,
    constant
  };

  kind_t kind{ kind_t::uniform };
  double a{ 0.0 }; //!< uniform: low, normal: mean, constant: value
  double b{ 1.0 }; //!< uniform: high, normal: stddev

  double sample( random_stream& rng ) const
  {
    switch ( kind )
    {
    case kind_t::uniform:
      return rng.uniform( a, b );
    case kind_t::normal:
      return rng.normal( a, b );
    default:
      return a;
    }
  }

  static weight_sampler uniform( double lo, double hi ) { return { kind_t::uniform, lo, hi }; }
  static weight_sampler normal( double mean, double stddev ) { return { kind_t::normal, mean, stddev }; }
  static weight_sampler constant( double value ) { return { kind_t::constant, value, 0.0 }; }

  /*! \brief Parses "uniform:lo:hi", "normal:mean:stddev", or "constant:v". */
  static weight_sampler parse( std::string const& text )
  {
    std::vector<std::string> parts;
    std::stringstream ss( text );
    std::string item;
    while ( std::getline( ss, item, ':' ) )
      parts.push_back( item );
    try
    {
      if ( parts.size() == 3 && parts[0] == "uniform" )
        return uniform( std::stod( parts[1] ), std::stod( parts[2] ) );
      if ( parts.size() == 3 && parts[0] == "normal" )
        return normal( std::stod( parts[1] ), std::stod( parts[2] ) );
      if ( parts.size() == 2 && parts[0] == "constant" )
        return constant( std::stod( parts[1] ) );
    }
    catch ( std::exception const& )
    {
    }
    throw error( error_code::config, "cannot parse weight sampler spec '" + text + "'" );
  }

  std::string to_string() const
  {
    std::ostringstream os;
    switch ( kind )
    {
    case kind_t::uniform:
      os << "uniform:" << a << ":" << b;
      break;
    case kind_t::normal:
      os << "normal:" << a << ":" << b;
      break;
    default:
      os << "constant:" << a;
      break;
    }
    return os.str();
  }
};

struct neuron_defaults
{
  double threshold{ 0.0 };
  double gain{ 1.0 };
  double max_rate{ 1000.0 };
};

/*! \brief Fully connected feedforward network.
 *
 * Layer 0 becomes input neurons, the last layer output neurons, everything
 * between hidden.  Neuron ids are assigned layer-major starting at 0 and
 * synapses connect every neuron of layer `l` to every neuron of layer
 * `l+1`.  Deterministic in (arguments, seed).
 */
inline network generate_feedforward( std::vector<std::size_t> const& layer_sizes, weight_sampler const& weights,
                                     std::uint64_t seed, neuron_defaults const& defaults = {} )
{
  if ( layer_sizes.size() < 2 )
  {
    throw error( error_code::config, "generate_feedforward: need at least two layers" );
  }
  for ( auto const s : layer_sizes )
  {
    if ( s == 0 )
      throw error( error_code::config, "generate_feedforward: layer sizes must be positive" );
  }

  network net;
  random_stream rng( seed );
  std::vector<std::vector<neuron_id>> layers;
  neuron_id next_id = 0;
  for ( std::size_t l = 0; l < layer_sizes.size(); ++l )
  {
    auto const kind = l == 0 ? neuron_kind::input : ( l + 1 == layer_sizes.size() ? neuron_kind::output : neuron_kind::hidden );
    std::vector<neuron_id> ids;
    for ( std::size_t i = 0; i < layer_sizes[l]; ++i )
    {
      net.neurons.push_back( { next_id, kind, defaults.threshold, defaults.gain, defaults.max_rate } );
      ids.push_back( next_id++ );
    }
    layers.push_back( std::move( ids ) );
  }
  for ( std::size_t l = 0; l + 1 < layers.size(); ++l )
  {
    for ( auto const src : layers[l] )
    {
      for ( auto const dst : layers[l + 1] )
      {
        net.synapses.push_back( { src, dst, weights.sample( rng ) } );
      }
    }
  }

  net.metadata["topology"] = "feedforward";
  std::ostringstream shape;
  for ( std::size_t l = 0; l < layer_sizes.size(); ++l )
  {
    if ( l )
      shape << ",";
    shape << layer_sizes[l];
  }
  net.metadata["layers"] = shape.str();
  net.metadata["seed"] = std::to_string( seed );
  net.metadata["weights"] = weights.to_string();
  return net;
}

/*! \brief Directed Erdos-Renyi recurrent reservoir.
 *
 * Every ordered pair of distinct core neurons carries a synapse with
 * probability `connection_prob`; self-loops are excluded.  The last tenth
 * of the core (at least one neuron) is tagged as output.  A single
 * unconnected input neuron (id = size) is appended so the network carries
 * a rate source; `attach_input_drive` wires it into the core when a driven
 * reservoir is wanted.
 *
 * The default weight scale keeps expected row sums below one so the
 * recurrent fixed point exists and the solver converges.
 */
inline network generate_reservoir( std::size_t size, double connection_prob, std::uint64_t seed,
                                   std::optional<weight_sampler> const& weights = std::nullopt,
                                   neuron_defaults const& defaults = {} )
{
  if ( size == 0 )
  {
    throw error( error_code::config, "generate_reservoir: size must be positive" );
  }
  if ( !( connection_prob > 0.0 ) || connection_prob > 1.0 )
  {
    throw error( error_code::config, "generate_reservoir: connection_prob must be in (0, 1]" );
  }

  weight_sampler sampler = weights.value_or( weight_sampler::uniform(
      0.16 / ( connection_prob * static_cast<double>( std::max<std::size_t>( size, 2 ) - 1 ) ),
      1.6 / ( connection_prob * static_cast<double>( std::max<std::size_t>( size, 2 ) - 1 ) ) ) );

  network net;
  random_stream rng( seed );
  std::size_t const num_outputs = std::max<std::size_t>( 1, size / 10 );
  for ( std::size_t i = 0; i < size; ++i )
  {
    auto const kind = i + num_outputs >= size ? neuron_kind::output : neuron_kind::hidden;
    net.neurons.push_back( { static_cast<neuron_id>( i ), kind, defaults.threshold, defaults.gain, defaults.max_rate } );
  }
  net.neurons.push_back( { static_cast<neuron_id>( size ), neuron_kind::input, defaults.threshold, defaults.gain, defaults.max_rate } );

  for ( std::size_t i = 0; i < size; ++i )
  {
    for ( std::size_t j = 0; j < size; ++j )
    {
      if ( i == j )
        continue;
      if ( rng.uniform01() < connection_prob )
      {
        net.synapses.push_back( { static_cast<neuron_id>( i ), static_cast<neuron_id>( j ), sampler.sample( rng ) } );
      }
    }
  }

  net.metadata["topology"] = "reservoir";
  net.metadata["size"] = std::to_string( size );
  std::ostringstream p;
  p << connection_prob;
  net.metadata["connection_prob"] = p.str();
  net.metadata["seed"] = std::to_string( seed );
  net.metadata["weights"] = sampler.to_string();
  return net;
}

/*! \brief Wires every input neuron to `fanout` seeded-random non-input targets. */
inline void attach_input_drive( network& net, std::size_t fanout, weight_sampler const& weights, std::uint64_t seed )
{
  std::vector<neuron_id> targets;
  std::vector<neuron_id> inputs;
  for ( auto const& n : net.neurons )
  {
    if ( n.kind == neuron_kind::input )
      inputs.push_back( n.id );
    else
      targets.push_back( n.id );
  }
  std::sort( targets.begin(), targets.end() );
  std::sort( inputs.begin(), inputs.end() );
  random_stream rng( seed );
  for ( auto const src : inputs )
  {
    std::vector<neuron_id> pool = targets;
    std::size_t const take = std::min( fanout, pool.size() );
    for ( std::size_t i = 0; i < take; ++i )
    {
      std::size_t const pick = i + static_cast<std::size_t>( rng.below( pool.size() - i ) );
      std::swap( pool[i], pool[pick] );
      net.synapses.push_back( { src, pool[i], weights.sample( rng ) } );
    }
  }
}

/*! \brief Copy with the saturation clamp removed (max_rate = infinity). */
inline network without_saturation( network net )
{
  for ( auto& n : net.neurons )
  {
    n.max_rate = std::numeric_limits<double>::infinity();
  }
  return net;
}


} // namespace fitmap
