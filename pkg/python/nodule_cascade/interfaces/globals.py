root_seed: int = 0
"""Seed every command derives its named random substreams from"""

show_progress: bool = True
"""Set to False to silence tqdm progress bars (cli --quiet)"""
