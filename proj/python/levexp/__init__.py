# Copyright 2026 The levexp Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Release-and-recapture expansion of levitated nanoparticles.

Thin Python layer over the C++ library. All quantities are SI (m, s, kg,
rad/s); angular frequencies are 2 pi f.
"""

from ._levexp import *  # noqa: F401,F403
from ._levexp import run_cli

__version__ = "0.1.0"


def main(argv=None):
    """Entry point for ``python -m levexp``: forwards to the command line."""
    import sys

    args = list(sys.argv[1:] if argv is None else argv)
    code, out, err = run_cli(args)
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
