"""Lie-theoretic numerical tools. See :obj:`lie.nilsoliton`."""
