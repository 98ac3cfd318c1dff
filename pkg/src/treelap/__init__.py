"""Finite-scale machinery for overlapping translations of tree-coded sets.

Layers, bottom up:

* ``ordinals`` -- Cantor-normal-form arithmetic below w^w and the
  extended rank domain.
* ``gf2`` -- packed bit vectors, independence, the unique-translation
  lemma.
* ``treesys`` -- finite tree systems, branch sets, overlap counts, the
  usability predicate.
* ``overlap`` -- level-l overlap structures, membership with witnesses,
  extension relations, and the exact bounded-universe rank.
* ``yzr`` -- bookkeeping systems, their axioms, quasi-embeddings, the
  lazy cute chain, and the finite splitting rank.
* ``bricks`` -- blocks of independent vectors realising overlap
  structures, with the quantified axiom scanners.
* ``builder`` -- the construction poset: seed, amalgamation moves,
  bookkept chains, classification/relocation lemmas, rank bounds.
* ``forcing`` -- the finite forcing model over a builder chain.
* ``bstar`` -- the pairing-bijection square from the warm-up example.
* ``serialize`` / ``cli`` -- artifact files and the command-line tools.
"""

__version__ = "0.1.0"
