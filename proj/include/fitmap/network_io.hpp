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
  \file network_io.hpp
  \brief Network file format (.snn.json), calibration batches
         (.rates.json), and magnitude pruning

  Serialization is canonical: neurons sorted by id, synapses by
  (src, dst), metadata keys sorted, numbers in shortest round-trip
  decimal form.  Serializing the same network twice yields identical
  bytes, which keeps golden-file tests stable.
*/

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "network.hpp"
#include "rate_sim.hpp"

namespace fitmap
{

using ordered_json = nlohmann::ordered_json;

inline constexpr int network_file_version = 1;

namespace detail
{

inline std::pair<std::size_t, std::size_t> line_and_column( std::string const& text, std::size_t byte )
{
  std::size_t line = 1, column = 1;
  for ( std::size_t i = 0; i < byte && i < text.size(); ++i )
  {
    if ( text[i] == '\n' )
    {
      ++line;
      column = 1;
    }
    else
    {
      ++column;
    }
  }
  return { line, column };
}

inline double require_finite( double value, std::string const& what )
{
  if ( !std::isfinite( value ) )
  {
    throw error( error_code::validation, "non-finite number in " + what );
  }
  return value;
}

} // namespace detail

/*! \brief Parses a `.snn.json` document into a validated network.
 *
 * Fails with a line/column position on malformed JSON, with an
 * "unknown version" error when the version field is not 1, and with the
 * first validation violation when the structure breaks an invariant.
 */
inline network parse_network( std::string const& text )
{
  ordered_json doc;
  try
  {
    doc = ordered_json::parse( text );
  }
  catch ( nlohmann::json::parse_error const& e )
  {
    auto const [line, column] = detail::line_and_column( text, e.byte ? e.byte - 1 : 0 );
    throw error( error_code::config, "syntax error at line " + std::to_string( line ) + ", column " + std::to_string( column ) + ": " + e.what() );
  }

  try
  {
    if ( !doc.is_object() || !doc.contains( "version" ) )
    {
      throw error( error_code::config, "not a network document: missing version" );
    }
    if ( doc["version"] != network_file_version )
    {
      throw error( error_code::config, "unknown version " + doc["version"].dump() + ", expected " + std::to_string( network_file_version ) );
    }

    network net;
    if ( doc.contains( "metadata" ) )
    {
      for ( auto const& [key, value] : doc["metadata"].items() )
      {
        net.metadata[key] = value.get<std::string>();
      }
    }
    for ( auto const& jn : doc.at( "neurons" ) )
    {
      neuron n;
      n.id = jn.at( "id" ).get<neuron_id>();
      auto const kind = neuron_kind_from_string( jn.at( "kind" ).get<std::string>() );
      if ( !kind )
      {
        throw error( error_code::config, "neuron " + std::to_string( n.id ) + " has unknown kind '" + jn.at( "kind" ).get<std::string>() + "'" );
      }
      n.kind = *kind;
      n.threshold = jn.at( "threshold" ).get<double>();
      n.gain = jn.at( "gain" ).get<double>();
      n.max_rate = jn.at( "max_rate" ).get<double>();
      net.neurons.push_back( n );
    }
    for ( auto const& js : doc.at( "synapses" ) )
    {
      net.synapses.push_back( { js.at( "src" ).get<neuron_id>(), js.at( "dst" ).get<neuron_id>(), js.at( "weight" ).get<double>() } );
    }

    auto const report = validate_network( net );
    if ( !report.ok() )
    {
      throw error( error_code::validation, "invariant violation: " + report.violations.front().code + ": " + report.violations.front().message );
    }
    return net;
  }
  catch ( nlohmann::json::exception const& e )
  {
    throw error( error_code::config, std::string( "malformed network document: " ) + e.what() );
  }
}

/*! \brief Canonical serialization of a valid network. */
inline std::string serialize_network( network const& net )
{
  auto const report = validate_network( net );
  if ( !report.ok() )
  {
    throw error( error_code::validation, "refusing to serialize invalid network: " + report.violations.front().code + ": " + report.violations.front().message );
  }

  network canon = net;
  canon.canonicalize();

  ordered_json doc;
  doc["version"] = network_file_version;
  doc["metadata"] = ordered_json::object();
  for ( auto const& [key, value] : canon.metadata )
  {
    doc["metadata"][key] = value;
  }
  doc["neurons"] = ordered_json::array();
  for ( auto const& n : canon.neurons )
  {
    doc["neurons"].push_back( { { "id", n.id },
                                { "kind", to_string( n.kind ) },
                                { "threshold", detail::require_finite( n.threshold, "neuron threshold" ) },
                                { "gain", detail::require_finite( n.gain, "neuron gain" ) },
                                { "max_rate", detail::require_finite( n.max_rate, "neuron max_rate" ) } } );
  }
  doc["synapses"] = ordered_json::array();
  for ( auto const& s : canon.synapses )
  {
    doc["synapses"].push_back( { { "src", s.src }, { "dst", s.dst }, { "weight", detail::require_finite( s.weight, "synapse weight" ) } } );
  }
  return doc.dump( 2 ) + "\n";
}

inline std::string read_text_file( std::string const& path )
{
  std::ifstream in( path, std::ios::binary );
  if ( !in )
  {
    throw error( error_code::config, "cannot open '" + path + "' for reading" );
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text_file( std::string const& path, std::string const& text )
{
  std::ofstream out( path, std::ios::binary );
  if ( !out )
  {
    throw error( error_code::config, "cannot open '" + path + "' for writing" );
  }
  out << text;
}

inline network load_network( std::string const& path )
{
  return parse_network( read_text_file( path ) );
}

inline void save_network( network const& net, std::string const& path )
{
  write_text_file( path, serialize_network( net ) );
}

/* magnitude pruning */

struct prune_result
{
  network net;
  std::size_t removed_count{ 0 };
};

/*! \brief One-shot magnitude pruning: removes synapses with |weight| < epsilon.
 *
 * Non-input neurons left without any incoming synapse are flagged in
 * `metadata["pruned_orphans"]` rather than deleted, so utilization metrics
 * still see them.  Idempotent for a fixed epsilon.
 */
inline prune_result prune_weights( network const& net, double epsilon )
{
  if ( epsilon < 0.0 )
  {
    throw error( error_code::config, "prune_weights: epsilon must be nonnegative" );
  }
  prune_result result;
  result.net = net;
  result.net.synapses.clear();
  for ( auto const& s : net.synapses )
  {
    if ( std::fabs( s.weight ) < epsilon )
    {
      ++result.removed_count;
    }
    else
    {
      result.net.synapses.push_back( s );
    }
  }

  auto const counts = fanin_counts( result.net );
  std::vector<neuron_id> orphans;
  for ( auto const& n : result.net.neurons )
  {
    if ( n.kind != neuron_kind::input && counts.at( n.id ) == 0 )
    {
      orphans.push_back( n.id );
    }
  }
  std::sort( orphans.begin(), orphans.end() );
  if ( !orphans.empty() )
  {
    std::ostringstream os;
    for ( std::size_t i = 0; i < orphans.size(); ++i )
    {
      if ( i )
        os << ",";
      os << orphans[i];
    }
    result.net.metadata["pruned_orphans"] = os.str();
  }
  else
  {
    result.net.metadata.erase( "pruned_orphans" );
  }
  return result;
}

/* calibration batches */

/*! \brief Named input rate samples used for calibration and comparison. */
struct rate_batch
{
  std::vector<std::pair<std::string, rate_vector>> samples;

  std::vector<rate_vector> vectors() const
  {
    std::vector<rate_vector> out;
    out.reserve( samples.size() );
    for ( auto const& [name, rates] : samples )
    {
      out.push_back( rates );
    }
    return out;
  }
};

inline std::string serialize_batch( rate_batch const& batch )
{
  ordered_json doc;
  doc["version"] = network_file_version;
  doc["samples"] = ordered_json::array();
  for ( auto const& [name, rates] : batch.samples )
  {
    ordered_json jr = ordered_json::object();
    for ( auto const& [id, rate] : rates )
    {
      jr[std::to_string( id )] = detail::require_finite( rate, "rate sample" );
    }
    doc["samples"].push_back( { { "name", name }, { "rates", jr } } );
  }
  return doc.dump( 2 ) + "\n";
}

inline rate_batch parse_batch( std::string const& text )
{
  try
  {
    auto const doc = ordered_json::parse( text );
    if ( doc.at( "version" ) != network_file_version )
    {
      throw error( error_code::config, "unknown batch version" );
    }
    rate_batch batch;
    for ( auto const& js : doc.at( "samples" ) )
    {
      rate_vector rates;
      for ( auto const& [key, value] : js.at( "rates" ).items() )
      {
        rates[static_cast<neuron_id>( std::stoul( key ) )] = value.get<double>();
      }
      batch.samples.push_back( { js.at( "name" ).get<std::string>(), std::move( rates ) } );
    }
    return batch;
  }
  catch ( nlohmann::json::exception const& e )
  {
    throw error( error_code::config, std::string( "malformed batch document: " ) + e.what() );
  }
}

inline rate_batch load_batch( std::string const& path )
{
  return parse_batch( read_text_file( path ) );
}

/*! \brief Seeded uniform calibration batch over [0, max_rate / 10] per input. */
inline rate_batch random_batch( network const& net, std::size_t size, std::uint64_t seed )
{
  rate_batch batch;
  random_stream rng( seed );
  std::vector<neuron const*> inputs;
  for ( auto const& n : net.neurons )
  {
    if ( n.kind == neuron_kind::input )
      inputs.push_back( &n );
  }
  std::sort( inputs.begin(), inputs.end(), []( neuron const* a, neuron const* b ) { return a->id < b->id; } );
  for ( std::size_t i = 0; i < size; ++i )
  {
    rate_vector rates;
    for ( auto const* n : inputs )
    {
      rates[n->id] = rng.uniform( 0.0, n->max_rate / 10.0 );
    }
    batch.samples.push_back( { "sample" + std::to_string( i ), std::move( rates ) } );
  }
  return batch;
}

/*! \brief FNV-1a fingerprint of the canonical serialization. */
inline std::uint64_t network_fingerprint( network const& net )
{
  auto const text = serialize_network( net );
  std::uint64_t hash = 1469598103934665603ull;
  for ( unsigned char const c : text )
  {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

} // namespace fitmap
