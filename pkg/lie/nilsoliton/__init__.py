"""
Welcome to the nilsoliton Python package!

The main feature of this package is the command line tool :code:`nilsoliton`,
which decides whether a nilpotent Lie algebra carries a nilsoliton metric
(a left-invariant Ricci soliton, Ric = cI + D with D a derivation) and backs every
yes or no with a certificate that can be checked independently.

.. code::

	import lie.nilsoliton as ns    # use as ns.core.StructureTensor

The :obj:`lie.nilsoliton.core` contains core classes used throughout.

The analysis is split into modules that build on each other.

	- :obj:`lie.nilsoliton.algebra` for bracket arithmetic and validation
	- :obj:`lie.nilsoliton.derivations` for Der(μ) and the pre-Einstein derivation
	- :obj:`lie.nilsoliton.stability` for the slice 𝔭, weights and obstructions
	- :obj:`lie.nilsoliton.ricci` for the Ricci endomorphism and soliton residual
	- :obj:`lie.nilsoliton.kempf_ness` for the energy and its gradient flow
	- :obj:`lie.nilsoliton.criterion` for the convex hull criterion
	- :obj:`lie.nilsoliton.check` for certificate verification

Finally there are modules used by the command line.

	- :obj:`lie.nilsoliton.document` for the JSON documents
	- :obj:`lie.nilsoliton.corpus` for the built-in algebras
	- :obj:`lie.nilsoliton.report` for the pipelines
	- :obj:`lie.nilsoliton.internal` for internal, private functions

See their respective documentation for details.

"""

# core classes
import lie.nilsoliton.core as core

# analysis
import lie.nilsoliton.algebra as algebra
import lie.nilsoliton.derivations as derivations
import lie.nilsoliton.stability as stability
import lie.nilsoliton.ricci as ricci
import lie.nilsoliton.kempf_ness as kempf_ness
import lie.nilsoliton.simplex as simplex
import lie.nilsoliton.criterion as criterion
import lie.nilsoliton.check as check

# command line support
import lie.nilsoliton.document as document
import lie.nilsoliton.corpus as corpus
import lie.nilsoliton.report as report
import lie.nilsoliton.internal as internal

__version__ = internal.VERSION

internal.logger.debug("Initialized " + __name__)
