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
  \file error.hpp
  \brief Error type shared by all fitmap modules
*/

#pragma once

#include <stdexcept>
#include <string>

namespace fitmap
{

/*! \brief Broad failure categories, mapped to CLI exit codes.
 *
 * `config` covers bad arguments and unreadable inputs, `validation`
 * covers networks or mappings that violate a structural invariant,
 * `capacity` covers crossbar-budget overruns, and `convergence`
 * covers fixed-point simulations that failed to settle.
 */
enum class error_code
{
  config = 2,
  validation = 3,
  capacity = 4,
  convergence = 5
};

class error : public std::runtime_error
{
public:
  error( error_code code, std::string const& message )
      : std::runtime_error( message ), _code( code )
  {
  }

  error_code code() const noexcept { return _code; }

  int exit_code() const noexcept { return static_cast<int>( _code ); }

private:
  error_code _code;
};

} // namespace fitmap
