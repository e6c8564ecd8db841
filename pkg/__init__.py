"""多层动态脑网络分析流水线包"""
# 空文件，使项目根目录成为一个Python包
