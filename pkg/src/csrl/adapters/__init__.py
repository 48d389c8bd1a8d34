"""Import adapters for third-party corpus formats.

Adapters are quarantined here: they convert foreign records into the
canonical JSONL session format and are the only code allowed to know
about external schemas. Core modules never import from this package.
"""
