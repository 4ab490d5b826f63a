"""
数据层：特征清单、二进制块文件、光流统计。
"""
