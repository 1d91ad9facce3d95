"""Lasserre moment relaxations for minimum-cardinality and minimum-rank problems."""
