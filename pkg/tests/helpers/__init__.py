"""
Test helpers: generators for algebra elements, wells, lattices and run
configs, and assertions for responses, elements and projectors
"""
