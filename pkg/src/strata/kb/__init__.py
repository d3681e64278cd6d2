"""Knowledge substrate: micro-ontology, lexicon, profiles, TMR/VMR processing."""
