"""Kho lưu trữ báo cáo (tuỳ chọn) trên SQLAlchemy."""
