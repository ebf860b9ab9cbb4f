"""
Phòng thí nghiệm số cho dòng Euler dừng 2 chiều trong miền vành khuyên,
đĩa thủng và miền ngoài.

Entrypoint CLI: xem `annulus_lab/main.py`.
"""
