using System;

namespace Demo.Util
{
    public class StringUtil
    {
        private static readonly string Empty = "";
        private static readonly char Space = ' ';

        public static bool IsBlank(string text)
        {
            if (text == null)
            {
                return true;
            }
            return text.Trim().Length == 0;
        }

        public static string OrEmpty(string text)
        {
            if (text == null)
            {
                return Empty;
            }
            return text;
        }

        public static int CountSpaces(string text)
        {
            int n = 0;
            for (int i = 0; i < text.Length; i++)
            {
                if (text[i] == Space)
                {
                    n = n + 1;
                }
            }
            return n;
        }
    }
}
